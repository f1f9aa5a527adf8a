#include "hgs/decoder.hpp"

#include <cmath>
#include <optional>

#include "hgs/errors.hpp"
#include "hgs/hetgraph.hpp"

namespace hgs {

namespace {

// Single-query multi-head attention restricted to `range`.
Var attention_context(Tape& tape, ParameterStore& params, const ModelConfig& cfg,
                      const std::string& prefix, Var query_in, Var kv, const Mask& range) {
  auto P = [&](const char* n) { return tape.parameter(params, prefix + n); };
  const int dk = cfg.d_k();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
  Var q = linear(query_in, P("Wq"));
  Var k = linear(kv, P("Wk"));
  Var v = linear(kv, P("Wv"));
  std::vector<Var> heads;
  for (int z = 0; z < cfg.heads; ++z) {
    Var s = scale(matmul_nt(slice_cols(q, z * dk, dk), slice_cols(k, z * dk, dk)), inv_sqrt);
    Var a = masked_softmax(s, range);
    heads.push_back(matmul(a, slice_cols(v, z * dk, dk)));
  }
  return linear(heads.size() == 1 ? heads[0] : concat_cols(heads), P("Wo"));
}

Var clipped_logits(Var context, Var candidates, const ModelConfig& cfg) {
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg.d_k()));
  return scale(tanh(scale(matmul_nt(context, candidates), inv_sqrt)), cfg.clip);
}

// Scalar exp: Eigen's vectorized exp clamps -inf to a denormal, and masked
// candidates must get exactly 0.
Tensor2 probabilities(const Tensor2& log_probs) {
  return log_probs.unaryExpr([](double x) { return std::exp(x); });
}

}  // namespace

int choose_index(const Tensor2& probs, const Mask& mask, DecodeMode mode, std::mt19937_64* rng) {
  int best = -1;
  if (mode == DecodeMode::kGreedy) {
    for (Eigen::Index c = 0; c < probs.cols(); ++c)
      if (mask(0, c) && (best < 0 || probs(0, c) > probs(0, best))) best = static_cast<int>(c);
  } else {
    if (!rng) throw ContractError("sampling decode needs a random generator");
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(*rng);
    double cum = 0.0;
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      if (!mask(0, c)) continue;
      best = static_cast<int>(c);
      cum += probs(0, c);
      if (u < cum) break;
    }
  }
  if (best < 0) throw ContractError("decode: empty candidate set");
  return best;
}

DecodedAction decode(Tape& tape, ParameterStore& params, const ModelConfig& cfg,
                     const EmbeddingSet& emb, const ScheduleState& state, Var glimpse,
                     DecodeMode mode, std::mt19937_64* rng, const ActionTriple* forced) {
  const auto actions = feasible_actions(state);
  if (actions.empty()) throw ContractError("decode: no feasible action");
  if (forced) {
    const auto reason = infeasibility_reason(state, *forced);
    if (!reason.empty())
      throw ContractError("decode: forced action " + to_string(*forced) + " infeasible: " + reason);
  }
  const Instance& inst = state.instance();
  const int n_ops = state.index.size();
  const int m = inst.num_machines;
  const int v = inst.num_vehicles;
  DecodedAction d;

  // Stage 1: operation.
  d.masks[0] = Mask::Constant(1, n_ops, false);
  for (const auto& a : actions) d.masks[0](0, state.index.flat(a.job, a.op)) = true;
  Var graph_mean = mean_rows(concat_rows({emb.ops, emb.machines, emb.vehicles}));
  Var h1 = attention_context(tape, params, cfg, "dec.s1.", concat_cols({graph_mean, glimpse}),
                             emb.ops, Mask::Constant(1, n_ops, true));
  Var l1 = clipped_logits(h1, emb.ops, cfg);
  Var lp1 = masked_log_softmax(l1, d.masks[0]);
  d.logits[0] = l1.value();
  d.probs[0] = probabilities(lp1.value());
  const int o = forced ? state.index.flat(forced->job, forced->op)
                       : choose_index(d.probs[0], d.masks[0], mode, rng);
  const int job = state.index.job_of(o);
  const int op = state.index.op_of(o);

  // Stage 2: machine, attending over the compatible set.
  Mask compatible = Mask::Constant(1, m, false);
  for (const auto& opt : inst.jobs[job][op].options) compatible(0, opt.machine) = true;
  d.masks[1] = Mask::Constant(1, m, false);
  for (const auto& a : actions)
    if (a.job == job) d.masks[1](0, a.machine) = true;
  Var in2 = add_col(emb.machines, transpose(slice_rows(emb.edge_om, o, 1)));
  Var h2 = attention_context(tape, params, cfg, "dec.s2.", h1, in2, compatible);
  Var l2 = clipped_logits(h2, in2, cfg);
  Var lp2 = masked_log_softmax(l2, d.masks[1]);
  d.logits[1] = l2.value();
  d.probs[1] = probabilities(lp2.value());
  const int k = forced ? forced->machine : choose_index(d.probs[1], d.masks[1], mode, rng);

  // Stage 3: vehicle.
  d.masks[2] = Mask::Constant(1, v, false);
  for (const auto& a : actions)
    if (a.job == job && a.machine == k) d.masks[2](0, a.vehicle) = true;
  Var in3 = add_col(emb.vehicles, transpose(slice_rows(emb.edge_ov, o, 1)));
  Var h3 = attention_context(tape, params, cfg, "dec.s3.", h2, in3, Mask::Constant(1, v, true));
  Var l3 = clipped_logits(h3, in3, cfg);
  Var lp3 = masked_log_softmax(l3, d.masks[2]);
  d.logits[2] = l3.value();
  d.probs[2] = probabilities(lp3.value());
  const int u = forced ? forced->vehicle : choose_index(d.probs[2], d.masks[2], mode, rng);

  d.action = ActionTriple{job, op, k, u};
  Var p1 = pick(lp1, 0, o);
  Var p2 = pick(lp2, 0, k);
  Var p3 = pick(lp3, 0, u);
  d.stage_log_prob = {p1.scalar(), p2.scalar(), p3.scalar()};
  d.total_log_prob = add(add(p1, p2), p3);
  d.glimpse = add(add(slice_rows(emb.ops, o, 1), slice_rows(emb.machines, k, 1)),
                  slice_rows(emb.vehicles, u, 1));
  return d;
}

Trajectory rollout(const Instance& inst, ParameterStore& params, const ModelConfig& cfg,
                   const RolloutOptions& opt) {
  if (opt.mode == DecodeMode::kSample && !opt.rng && !opt.forced)
    throw ContractError("rollout: sampling needs a random generator");
  Tape local(false);
  Tape& tape = opt.tape ? *opt.tape : local;

  ScheduleState s = reset(inst);
  Trajectory t;
  t.lb_denominator = s.lb_denominator;
  t.initial_lower_bound_scaled = makespan_lower_bound_scaled(s);
  Tensor2 glimpse_value = Tensor2::Zero(1, cfg.d_h);
  Var glimpse = tape.constant(glimpse_value);
  std::optional<Var> lp_sum;
  std::int64_t return_scaled = 0;
  std::size_t step = 0;
  while (!s.terminal()) {
    if (!opt.tape) {
      tape.clear();
      glimpse = tape.constant(glimpse_value);
    }
    const ActionTriple* forced = nullptr;
    if (opt.forced) {
      if (step >= opt.forced->size())
        throw ContractError("rollout: forced action sequence ends before the episode");
      forced = &(*opt.forced)[step];
    }
    const auto feats = featurize(s);
    const auto emb = encode(tape, params, cfg, feats);
    auto d = decode(tape, params, cfg, emb, s, glimpse, opt.mode, opt.rng, forced);
    if (opt.tape) {
      lp_sum = lp_sum ? add(*lp_sum, d.total_log_prob) : d.total_log_prob;
      glimpse = d.glimpse;
    } else {
      glimpse_value = d.glimpse.value();
    }
    const auto out = apply_action(s, d.action);
    t.actions.push_back(d.action);
    t.log_probs.push_back(d.log_prob());
    t.rewards.push_back(out.reward);
    t.rewards_scaled.push_back(out.reward_scaled);
    return_scaled += out.reward_scaled;
    ++step;
  }
  if (opt.forced && step != opt.forced->size())
    throw ContractError("rollout: forced action sequence is longer than the episode");
  t.total_return = static_cast<double>(return_scaled) / static_cast<double>(t.lb_denominator);
  t.makespan = current_makespan(s);
  t.schedule = final_schedule(s);
  if (opt.tape) t.log_prob_sum = lp_sum ? *lp_sum : tape.constant(Tensor2::Zero(1, 1));
  return t;
}

Time greedy_makespan(const Instance& inst, ParameterStore& params, const ModelConfig& cfg) {
  return rollout(inst, params, cfg, RolloutOptions{}).makespan;
}

}  // namespace hgs
