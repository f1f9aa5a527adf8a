#include "hgs/encoder.hpp"

#include <cmath>
#include <optional>

#include "hgs/errors.hpp"

namespace hgs {

namespace {

Tensor2 mask_values(const Mask& m) { return m.cast<double>().matrix(); }

// Elementwise w * e + b for a scalar-width edge map, zero where masked.
Var project_edges(Tape& tape, ParameterStore& params, const std::string& name, const Tensor2& raw,
                  const Mask* mask) {
  Var e = tape.constant(raw);
  Var flat = reshape(e, raw.size(), 1);
  Var out = linear(flat, tape.parameter(params, "in." + name + ".W"),
                   tape.parameter(params, "in." + name + ".b"));
  out = reshape(out, raw.rows(), raw.cols());
  if (mask) out = mul_const(out, mask_values(*mask));
  return out;
}

}  // namespace

HmhaResult hmha(Tape& tape, ParameterStore& params, const ModelConfig& cfg,
                const std::string& prefix, Var x, const std::vector<NeighborInput>& neighbors) {
  if (neighbors.empty()) throw ContractError("hmha: no neighbor inputs");
  const Eigen::Index rows = x.rows();
  const int heads = cfg.heads;
  const int dk = cfg.d_k();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
  auto P = [&](const std::string& n) { return tape.parameter(params, prefix + n); };

  Eigen::Index total = 0;
  for (const auto& nb : neighbors) {
    if (nb.edge.rows() != rows || nb.edge.cols() != nb.nodes.rows())
      throw ShapeError("hmha " + prefix + nb.cls + ": edge " + shape_string(nb.edge.value()) +
                       " for " + std::to_string(rows) + " queries and " +
                       std::to_string(nb.nodes.rows()) + " neighbors");
    if (nb.mask->rows() != rows || nb.mask->cols() != nb.nodes.rows())
      throw ShapeError("hmha " + prefix + nb.cls + ": mask does not match edge shape " +
                       shape_string(nb.edge.value()));
    total += nb.nodes.rows();
  }
  Mask joint(rows, total);
  {
    Eigen::Index off = 0;
    for (const auto& nb : neighbors) {
      joint.middleCols(off, nb.nodes.rows()) = *nb.mask;
      off += nb.nodes.rows();
    }
  }

  Var q = linear(x, P("Wq"));
  std::vector<Var> keys;
  std::vector<Var> values;
  for (const auto& nb : neighbors) {
    keys.push_back(linear(nb.nodes, P("Wk_" + nb.cls)));
    values.push_back(linear(nb.nodes, P("Wv_" + nb.cls)));
  }

  std::vector<std::optional<Var>> aug_sum(neighbors.size());
  std::vector<Var> head_out;
  for (int z = 0; z < heads; ++z) {
    Var qz = slice_cols(q, z * dk, dk);
    std::vector<Var> parts;
    for (std::size_t s = 0; s < neighbors.size(); ++s) {
      const auto& nb = neighbors[s];
      Var score = scale(matmul_nt(qz, slice_cols(keys[s], z * dk, dk)), inv_sqrt);
      Var aug = edge_mlp(score, nb.edge, P("e1_" + nb.cls), P("e2_" + nb.cls));
      parts.push_back(aug);
      aug_sum[s] = aug_sum[s] ? add(*aug_sum[s], aug) : aug;
    }
    Var logits = parts.size() == 1 ? parts[0] : concat_cols(parts);
    Var attn = masked_softmax(logits, joint, EmptyRow::kZero);
    std::optional<Var> head;
    Eigen::Index off = 0;
    for (std::size_t s = 0; s < neighbors.size(); ++s) {
      const Eigen::Index n = neighbors[s].nodes.rows();
      Var a = neighbors.size() == 1 ? attn : slice_cols(attn, off, n);
      Var h = matmul(a, slice_cols(values[s], z * dk, dk));
      head = head ? add(*head, h) : h;
      off += n;
    }
    head_out.push_back(*head);
  }

  HmhaResult res;
  res.nodes = linear(heads == 1 ? head_out[0] : concat_cols(head_out), P("Wo"));
  std::vector<bool> has_neighbor(rows);
  bool any_isolated = false;
  for (Eigen::Index r = 0; r < rows; ++r) {
    has_neighbor[r] = joint.row(r).any();
    any_isolated = any_isolated || !has_neighbor[r];
  }
  if (any_isolated) res.nodes = select_rows(has_neighbor, res.nodes, x);

  for (std::size_t s = 0; s < neighbors.size(); ++s) {
    const auto& nb = neighbors[s];
    Var mean = scale(*aug_sum[s], 1.0 / heads);
    Var e = mul_scalar(mean, P("e3_" + nb.cls));
    res.edges.push_back(mul_const(e, mask_values(*nb.mask)));
  }
  return res;
}

Var add_norm_feed_forward(Tape& tape, ParameterStore& params, const std::string& prefix, Var x,
                          Var h) {
  auto P = [&](const std::string& n) { return tape.parameter(params, prefix + n); };
  Var x1 = instance_norm(add(x, h), P("an1.g"), P("an1.b"));
  Var ff = linear(relu(linear(x1, P("ff1.W"), P("ff1.b"))), P("ff2.W"), P("ff2.b"));
  return instance_norm(add(x1, ff), P("an2.g"), P("an2.b"));
}

EmbeddingSet project_inputs(Tape& tape, ParameterStore& params, const ModelConfig& cfg,
                            const HeteroGraphFeatures& f) {
  (void)cfg;
  auto proj = [&](const Tensor2& feats, const char* name) {
    return linear(tape.constant(feats), tape.parameter(params, std::string("in.") + name + ".W"),
                  tape.parameter(params, std::string("in.") + name + ".b"));
  };
  EmbeddingSet e;
  e.ops = proj(f.op_feats, "op");
  e.machines = proj(f.mach_feats, "mach");
  e.vehicles = proj(f.veh_feats, "veh");
  e.edge_om = project_edges(tape, params, "om", f.edge_om, &f.mask_om);
  e.edge_ov = project_edges(tape, params, "ov", f.edge_ov, &f.mask_ov);
  e.edge_mm = project_edges(tape, params, "mm", f.edge_mm, nullptr);
  e.layer = 0;
  return e;
}

namespace {

struct BlockOutputs {
  HmhaResult ops;
  HmhaResult machines;
  HmhaResult vehicles;
};

// The three attention blocks of one layer. `o`, `m`, `v` name the parameter
// prefix of each block and the class suffix of each neighbor input.
BlockOutputs attend(Tape& tape, ParameterStore& params, const ModelConfig& cfg,
                    const EmbeddingSet& in, const HeteroGraphFeatures& f, const Mask& om_t,
                    const Mask& ov_t, const Mask& mm_all, const std::string& o_prefix,
                    const std::string& m_prefix, const std::string& v_prefix,
                    const std::string& cls_o, const std::string& cls_m, const std::string& cls_v) {
  Var om_t_edge = transpose(in.edge_om);
  Var ov_t_edge = transpose(in.edge_ov);
  BlockOutputs out;
  out.ops = hmha(tape, params, cfg, o_prefix, in.ops,
                 {{in.machines, in.edge_om, &f.mask_om, cls_m},
                  {in.vehicles, in.edge_ov, &f.mask_ov, cls_v}});
  out.machines = hmha(tape, params, cfg, m_prefix, in.machines,
                      {{in.ops, om_t_edge, &om_t, cls_o}, {in.machines, in.edge_mm, &mm_all, cls_m}});
  out.vehicles = hmha(tape, params, cfg, v_prefix, in.vehicles, {{in.ops, ov_t_edge, &ov_t, cls_o}});
  return out;
}

void combine_edges(EmbeddingSet& e, const BlockOutputs& b) {
  e.edge_om = add(b.ops.edges[0], transpose(b.machines.edges[0]));
  e.edge_ov = add(b.ops.edges[1], transpose(b.vehicles.edges[0]));
  e.edge_mm = b.machines.edges[1];
}

}  // namespace

EmbeddingSet sub_encode_layer(Tape& tape, ParameterStore& params, const ModelConfig& cfg,
                              const EmbeddingSet& in, const HeteroGraphFeatures& f, int l) {
  if (l < 1 || l >= cfg.layers)
    throw ContractError("sub_encode_layer: layer " + std::to_string(l) + " outside [1, " +
                        std::to_string(cfg.layers - 1) + "]");
  const std::string p = "enc" + std::to_string(l) + ".";
  const Mask om_t = f.mask_om.transpose();
  const Mask ov_t = f.mask_ov.transpose();
  const Mask mm_all = Mask::Constant(f.num_machines(), f.num_machines(), true);
  const auto b = attend(tape, params, cfg, in, f, om_t, ov_t, mm_all, p + "O.", p + "M.", p + "V.",
                        "O", "M", "V");
  EmbeddingSet out;
  out.ops = add_norm_feed_forward(tape, params, p + "O.", in.ops, b.ops.nodes);
  out.machines = add_norm_feed_forward(tape, params, p + "M.", in.machines, b.machines.nodes);
  out.vehicles = add_norm_feed_forward(tape, params, p + "V.", in.vehicles, b.vehicles.nodes);
  combine_edges(out, b);
  out.layer = l;
  return out;
}

EmbeddingSet global_encode_layer(Tape& tape, ParameterStore& params, const ModelConfig& cfg,
                                 const EmbeddingSet& in, const HeteroGraphFeatures& f) {
  const std::string p = "enc" + std::to_string(cfg.layers) + ".G.";
  const Mask om_t = f.mask_om.transpose();
  const Mask ov_t = f.mask_ov.transpose();
  const Mask mm_all = Mask::Constant(f.num_machines(), f.num_machines(), true);
  const auto b = attend(tape, params, cfg, in, f, om_t, ov_t, mm_all, p, p, p, "X", "X", "X");

  // Normalization statistics span all nodes of the graph.
  const Eigen::Index n_o = in.ops.rows();
  const Eigen::Index n_m = in.machines.rows();
  const Eigen::Index n_v = in.vehicles.rows();
  Var x = concat_rows({in.ops, in.machines, in.vehicles});
  Var h = concat_rows({b.ops.nodes, b.machines.nodes, b.vehicles.nodes});
  Var y = add_norm_feed_forward(tape, params, p, x, h);
  EmbeddingSet out;
  out.ops = slice_rows(y, 0, n_o);
  out.machines = slice_rows(y, n_o, n_m);
  out.vehicles = slice_rows(y, n_o + n_m, n_v);
  combine_edges(out, b);
  out.layer = cfg.layers;
  return out;
}

EmbeddingSet encode(Tape& tape, ParameterStore& params, const ModelConfig& cfg,
                    const HeteroGraphFeatures& feats) {
  EmbeddingSet e = project_inputs(tape, params, cfg, feats);
  for (int l = 1; l < cfg.layers; ++l) e = sub_encode_layer(tape, params, cfg, e, feats, l);
  return global_encode_layer(tape, params, cfg, e, feats);
}

}  // namespace hgs
