#pragma once

#include <string>
#include <vector>

#include "hgs/hetgraph.hpp"
#include "hgs/model.hpp"
#include "hgs/tensor.hpp"

namespace hgs {

// Node and edge embeddings after some encoder layer. Edge embeddings have
// width d_e = 1 and are stored as plain matrices; masked edges hold 0.
struct EmbeddingSet {
  Var ops;       // |O| x d_h
  Var machines;  // m x d_h
  Var vehicles;  // v x d_h
  Var edge_om;   // |O| x m
  Var edge_ov;   // |O| x v
  Var edge_mm;   // m x m
  int layer = 0;
};

// One class of neighbors seen by an attention block.
struct NeighborInput {
  Var nodes;          // n x d_h
  Var edge;           // rows(x) x n
  const Mask* mask;   // rows(x) x n, true = edge present
  std::string cls;    // parameter suffix for this neighbor class
};

struct HmhaResult {
  Var nodes;               // rows(x) x d_h
  std::vector<Var> edges;  // per neighbor input, rows(x) x n, masked
};

// Heterogeneous multi-head attention of `x` over the union of the neighbor
// inputs. Compatibilities are augmented with edge embeddings through a
// two-layer map and normalized jointly. Rows without any neighbor return x.
HmhaResult hmha(Tape& tape, ParameterStore& params, const ModelConfig& cfg,
                const std::string& prefix, Var x, const std::vector<NeighborInput>& neighbors);

// instance_norm(x1 + FF(x1)) with x1 = instance_norm(x + h).
Var add_norm_feed_forward(Tape& tape, ParameterStore& params, const std::string& prefix, Var x,
                          Var h);

EmbeddingSet project_inputs(Tape& tape, ParameterStore& params, const ModelConfig& cfg,
                            const HeteroGraphFeatures& feats);
// Layer l in [1, L-1]: separate operation, machine and vehicle blocks.
EmbeddingSet sub_encode_layer(Tape& tape, ParameterStore& params, const ModelConfig& cfg,
                              const EmbeddingSet& in, const HeteroGraphFeatures& feats, int l);
// Layer L: one shared block over every node and edge of the graph.
EmbeddingSet global_encode_layer(Tape& tape, ParameterStore& params, const ModelConfig& cfg,
                                 const EmbeddingSet& in, const HeteroGraphFeatures& feats);

EmbeddingSet encode(Tape& tape, ParameterStore& params, const ModelConfig& cfg,
                    const HeteroGraphFeatures& feats);

}  // namespace hgs
