#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "hgs/encoder.hpp"
#include "hgs/environment.hpp"
#include "hgs/schedule.hpp"

namespace hgs {

enum class DecodeMode { kSample, kGreedy };

struct DecodedAction {
  ActionTriple action;
  std::array<double, 3> stage_log_prob{};  // operation, machine, vehicle
  Var total_log_prob;                      // 1 x 1, sum of the three stages
  Var glimpse;                             // 1 x d_h, input to the next step
  // For inspection: clipped logits before masking, candidate masks and
  // resulting probabilities of each stage (row vectors).
  std::array<Tensor2, 3> logits;
  std::array<Mask, 3> masks;
  std::array<Tensor2, 3> probs;

  double log_prob() const { return stage_log_prob[0] + stage_log_prob[1] + stage_log_prob[2]; }
};

// Three-stage decoding on one state. `glimpse` is the previous step's
// glimpse (zeros at the first step). With `forced` set the given action is
// scored instead of chosen; it must be feasible.
DecodedAction decode(Tape& tape, ParameterStore& params, const ModelConfig& cfg,
                     const EmbeddingSet& emb, const ScheduleState& state, Var glimpse,
                     DecodeMode mode, std::mt19937_64* rng, const ActionTriple* forced = nullptr);

// Index chosen from a probability row: argmax with lowest-index ties, or an
// inverse-CDF draw restricted to admitted entries.
int choose_index(const Tensor2& probs, const Mask& mask, DecodeMode mode, std::mt19937_64* rng);

struct Trajectory {
  std::vector<ActionTriple> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<std::int64_t> rewards_scaled;
  std::int64_t lb_denominator = 1;
  std::int64_t initial_lower_bound_scaled = 0;
  double total_return = 0.0;  // sum of rewards
  Time makespan = 0;
  Schedule schedule;
  // Sum of per-step log-probabilities on the caller's recording tape; only
  // set when RolloutOptions::tape is given.
  Var log_prob_sum;
};

struct RolloutOptions {
  DecodeMode mode = DecodeMode::kGreedy;
  std::mt19937_64* rng = nullptr;                     // required for kSample
  Tape* tape = nullptr;                               // keep the episode graph for backward
  const std::vector<ActionTriple>* forced = nullptr;  // replay these actions
};

Trajectory rollout(const Instance& inst, ParameterStore& params, const ModelConfig& cfg,
                   const RolloutOptions& options);

// Greedy makespan of one instance without recording gradients.
Time greedy_makespan(const Instance& inst, ParameterStore& params, const ModelConfig& cfg);

}  // namespace hgs
