// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "hgs/baselines.hpp"
#include "hgs/decoder.hpp"
#include "hgs/seeds.hpp"
#include "hgs/training.hpp"
#include "support.hpp"

using namespace hgs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct RandomEpisodes {
  std::vector<Instance> instances;
  std::vector<test::RandomEpisode> episodes;
};

// Shared by the feasibility and telescoping criteria.
const RandomEpisodes& random_episodes() {
  static const RandomEpisodes eps = [] {
    RandomEpisodes r;
    std::mt19937_64 rng(1);
    const int sizes[3][3] = {{2, 2, 1}, {5, 3, 3}, {10, 6, 6}};
    for (int e = 0; e < 1000; ++e) {
      const auto* s = sizes[e % 3];
      r.instances.push_back(generate_instance(s[0], s[1], s[2], substream_seed(1, "feasibility", e)));
      r.episodes.push_back(test::random_episode(r.instances.back(), rng));
    }
    return r;
  }();
  return eps;
}

Outcome feasibility() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& r = random_episodes();
  std::size_t violations = 0;
  for (std::size_t e = 0; e < r.episodes.size(); ++e)
    violations += check_schedule(r.instances[e], r.episodes[e].schedule).size();
  const double s = seconds_since(t0);
  return {violations == 0 && s < 120.0,
          std::to_string(r.episodes.size()) + " episodes, " + std::to_string(violations) + " violations, " +
              fmt("%.1fs", s)};
}

Outcome telescoping() {
  const auto& r = random_episodes();
  int mismatches = 0;
  for (const auto& ep : r.episodes) {
    std::int64_t sum = 0;
    for (auto x : ep.rewards_scaled) sum += x;
    if (sum != ep.initial_lb_scaled - ep.schedule.makespan * ep.lb_denominator) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " of " + std::to_string(r.episodes.size()) +
                               " episodes off the exact integer identity"};
}

ModelConfig small_model() {
  ModelConfig c;
  c.d_h = 16;
  c.heads = 2;
  c.d_z = 4;
  c.d_ff = 32;
  return c;
}

Outcome oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelConfig model = small_model();
  auto params = init_model(model, 5);
  int bad = 0, checked = 0;
  for (int i = 0; i < 50; ++i) {
    const int m = 1 + i % 3;
    const int n = m == 3 ? 1 : 2;  // at most six operations
    const auto inst = generate_instance(n, m, 1 + i % 2, substream_seed(3, "oracle", i));
    if (inst.num_operations() > 6) return {false, "instance with more than six operations"};
    const auto opt = exhaustive_optimal(inst);
    GAConfig ga;
    ga.population = 20;
    ga.generations = 20;
    ga.seed = substream_seed(3, "ga", i);
    std::vector<Time> others{run_rule(inst, Rule::kSpt).makespan, run_rule(inst, Rule::kLpt).makespan,
                             run_rule(inst, Rule::kFifo).makespan, ga_solve(inst, ga).best.makespan,
                             greedy_makespan(inst, params, model)};
    for (Time t : others)
      if (opt.best.makespan > t) ++bad;
    if (replay(inst, opt.best.actions).makespan != opt.best.makespan) ++bad;
    ++checked;
  }
  const double s = seconds_since(t0);
  return {bad == 0 && s < 300.0,
          std::to_string(checked) + " instances, " + std::to_string(bad) + " violations, " + fmt("%.1fs", s)};
}

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  using Shapes = std::vector<std::pair<int, int>>;
  using Fn = std::function<Var(const std::vector<Var>&)>;
  Mask mask(3, 4);
  mask << true, false, true, true, false, true, false, false, true, true, true, true;
  Mask with_empty = mask;
  with_empty.row(1).setConstant(false);
  Tensor2 weights = Tensor2::Constant(3, 4, 0.5);
  weights(1, 2) = -3.0;
  const std::vector<std::pair<Shapes, Fn>> primitives{
      {{{3, 4}, {4, 2}}, [](auto& x) { return matmul(x[0], x[1]); }},
      {{{3, 4}, {5, 4}}, [](auto& x) { return matmul_nt(x[0], x[1]); }},
      {{{3, 4}, {2, 4}}, [](auto& x) { return linear(x[0], x[1]); }},
      {{{3, 4}, {2, 4}, {1, 2}}, [](auto& x) { return linear(x[0], x[1], x[2]); }},
      {{{3, 4}, {3, 4}}, [](auto& x) { return add(x[0], x[1]); }},
      {{{3, 4}, {3, 4}}, [](auto& x) { return sub(x[0], x[1]); }},
      {{{3, 4}, {1, 4}}, [](auto& x) { return add_row(x[0], x[1]); }},
      {{{3, 4}, {3, 1}}, [](auto& x) { return add_col(x[0], x[1]); }},
      {{{3, 4}}, [](auto& x) { return scale(x[0], 0.3); }},
      {{{3, 4}, {1, 1}}, [](auto& x) { return mul_scalar(x[0], x[1]); }},
      {{{3, 4}}, [&](auto& x) { return mul_const(x[0], weights); }},
      {{{3, 4}}, [](auto& x) { return reshape(x[0], 2, 6); }},
      {{{3, 4}}, [](auto& x) { return transpose(x[0]); }},
      {{{3, 4}, {3, 2}}, [](auto& x) { return concat_cols({x[0], x[1]}); }},
      {{{3, 4}, {1, 4}}, [](auto& x) { return concat_rows({x[0], x[1]}); }},
      {{{3, 5}}, [](auto& x) { return slice_cols(x[0], 1, 3); }},
      {{{4, 3}}, [](auto& x) { return slice_rows(x[0], 1, 2); }},
      {{{4, 3}}, [](auto& x) { return gather_rows(x[0], {3, 1, 1}); }},
      {{{3, 2}, {3, 2}}, [](auto& x) { return select_rows({true, false, true}, x[0], x[1]); }},
      {{{3, 4}}, [](auto& x) { return relu(x[0]); }},
      {{{3, 4}}, [](auto& x) { return tanh(x[0]); }},
      {{{3, 4}}, [](auto& x) { return mean_rows(x[0]); }},
      {{{3, 4}}, [](auto& x) { return sum_rows(x[0]); }},
      {{{3, 4}}, [](auto& x) { return sum_all(x[0]); }},
      {{{3, 4}}, [](auto& x) { return pick(x[0], 2, 1); }},
      {{{3, 4}}, [&](auto& x) { return masked_softmax(x[0], mask); }},
      {{{3, 4}}, [&](auto& x) { return masked_softmax(x[0], with_empty, EmptyRow::kZero); }},
      {{{3, 4}}, [&](auto& x) {
         const Var l = masked_log_softmax(x[0], mask);
         return concat_cols({pick(l, 0, 0), pick(l, 0, 3), pick(l, 1, 1), pick(l, 2, 2)});
       }},
      {{{4, 3}, {1, 3}, {1, 3}}, [](auto& x) { return instance_norm(x[0], x[1], x[2]); }},
      {{{3, 4}, {3, 4}, {5, 2}, {1, 5}}, [](auto& x) { return edge_mlp(x[0], x[1], x[2], x[3]); }},
  };
  double worst_primitive = 0.0;
  for (std::size_t i = 0; i < primitives.size(); ++i)
    worst_primitive = std::max(worst_primitive,
                               test::primitive_gradient_check(primitives[i].first, primitives[i].second, 10 + i).max_rel_error);

  ModelConfig tiny;
  tiny.d_h = 8;
  tiny.heads = 2;
  tiny.d_z = 4;
  tiny.d_ff = 16;
  tiny.layers = 1;
  auto params = init_model(tiny, 21);
  const auto inst = generate_instance(2, 2, 1, 21);
  const auto actions = run_rule(inst, Rule::kSpt).actions;
  const auto full = test::gradient_check(params, [&](Tape& tape) {
    RolloutOptions opt;
    opt.forced = &actions;
    opt.tape = &tape;
    return rollout(inst, params, tiny, opt).log_prob_sum;
  });
  const double s = seconds_since(t0);
  return {worst_primitive <= 1e-4 && full.max_rel_error <= 1e-3 && s < 300.0,
          std::to_string(primitives.size()) + " primitives max " + fmt("%.2e", worst_primitive) + ", full model max " + fmt("%.2e", full.max_rel_error) +
              " over " + std::to_string(full.checked) + " parameters, " + fmt("%.1fs", s)};
}

Outcome masking() {
  const ModelConfig model = small_model();
  std::mt19937_64 rng(8);
  int infeasible = 0, leaked = 0, steps = 0;
  const int sizes[3][3] = {{2, 2, 1}, {3, 3, 2}, {5, 3, 3}};
  for (int e = 0; e < 1000; ++e) {
    auto params = init_model(model, substream_seed(8, "params", e));
    const auto* sz = sizes[e % 3];
    const auto inst = generate_instance(sz[0], sz[1], sz[2], substream_seed(8, "masking", e));
    auto s = reset(inst);
    Tape tape(false);
    Tensor2 glimpse = Tensor2::Zero(1, model.d_h);
    while (!s.terminal()) {
      const auto emb = encode(tape, params, model, featurize(s));
      const auto d = decode(tape, params, model, emb, s, tape.constant(glimpse), DecodeMode::kSample, &rng);
      for (int k = 0; k < 3; ++k)
        for (Eigen::Index j = 0; j < d.masks[k].cols(); ++j)
          if (!d.masks[k](0, j) && d.probs[k](0, j) != 0.0) ++leaked;
      if (!infeasibility_reason(s, d.action).empty()) {
        ++infeasible;
        break;
      }
      apply_action(s, d.action);
      glimpse = d.glimpse.value();
      tape.clear();
      ++steps;
    }
  }
  return {infeasible == 0 && leaked == 0, std::to_string(steps) + " decisions, " + std::to_string(infeasible) +
                                               " infeasible, " + std::to_string(leaked) + " masked entries with p > 0"};
}

Outcome gap_metric() {
  const double a = gap(105.95, 85.65);
  const double b = gap(555.05, 511.7);
  return {std::lround(a) == 24 && std::lround(b) == 8,
          "gap(105.95, 85.65) = " + fmt("%.2f%%", a) + ", gap(555.05, 511.7) = " + fmt("%.2f%%", b)};
}

Outcome learning_small() {
  TrainConfig c;
  c.model.d_h = 8;
  c.model.heads = 2;
  c.model.d_z = 4;
  c.model.d_ff = 16;
  c.num_jobs = 2;
  c.num_machines = 2;
  c.num_vehicles = 1;
  c.epochs = 200;
  c.episodes_per_epoch = 1;
  c.batch_size = 20;
  c.refresh = 1;
  c.adam.lr = 1e-3;
  c.validation_count = 100;
  c.validation_period = 200;
  c.seed = 0;
  const auto r = train(c);
  const double before = r.log.front().mean_greedy_makespan;
  const double after = r.log.back().mean_greedy_makespan;
  const double reduction = 100.0 * (1.0 - after / before);
  const double s = r.log.back().wallclock_s;
  return {reduction >= 10.0 && s < 600.0, "2x2x1 greedy mean " + fmt("%.2f", before) + " -> " + fmt("%.2f", after) +
                                               " (" + fmt("%.1f%%", reduction) + " reduction, need 10%), " +
                                               fmt("%.0fs", s)};
}

// 5x3x3 run whose checkpoint the scale criterion reuses.
TrainConfig medium_config(const fs::path& checkpoint) {
  TrainConfig c;
  c.model.d_h = 32;
  c.model.heads = 4;
  c.model.d_z = 8;
  c.model.d_ff = 64;
  c.num_jobs = 5;
  c.num_machines = 3;
  c.num_vehicles = 3;
  c.epochs = 100000;
  c.episodes_per_epoch = 1;
  c.batch_size = 32;
  c.refresh = 1;
  c.adam.lr = 3e-4;
  c.validation_count = 20;
  c.validation_period = 250;
  c.seed = 11;
  c.time_budget_s = 50.0 * 60.0;
  c.checkpoint = checkpoint.string();
  return c;
}

Outcome learning_medium(const fs::path& checkpoint) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = medium_config(checkpoint);
  auto r = train(cfg, [](const TrainLogRow& row) {
    std::printf("  [5x3x3 training] episode %d greedy %.2f (%.0fs)\n", row.episode, row.mean_greedy_makespan,
                row.wallclock_s);
    std::fflush(stdout);
  });
  double hgs = 0.0, fifo = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto inst = generate_instance(5, 3, 3, substream_seed(cfg.seed, "held-out", i));
    hgs += static_cast<double>(greedy_makespan(inst, r.params, cfg.model));
    fifo += static_cast<double>(run_rule(inst, Rule::kFifo).makespan);
  }
  hgs /= 100.0;
  fifo /= 100.0;
  const double s = seconds_since(t0);
  return {hgs <= fifo && s < 3600.0, "5x3x3 held-out mean: HGS " + fmt("%.2f", hgs) + ", FIFO " + fmt("%.2f", fifo) +
                                         " after " + std::to_string(r.episodes_done) + " episodes, " +
                                         fmt("%.0fs", s)};
}

Outcome scale_agnostic(const fs::path& checkpoint) {
  if (!fs::exists(checkpoint)) return {false, "no 5x3x3 checkpoint"};
  auto lm = load_model(checkpoint);
  const std::size_t count_before = lm.params.flat_size();
  std::string detail;
  bool ok = true;
  const int sizes[2][3] = {{20, 10, 10}, {30, 15, 15}};
  for (const auto* sz : sizes) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto inst = generate_instance(sz[0], sz[1], sz[2], 77);
    const auto t = rollout(inst, lm.params, lm.model, {});
    const auto violations = check_schedule(inst, t.schedule).size();
    ok = ok && violations == 0 && static_cast<int>(t.actions.size()) == inst.num_operations();
    detail += std::to_string(sz[0]) + "x" + std::to_string(sz[1]) + "x" + std::to_string(sz[2]) + " makespan " +
              std::to_string(t.makespan) + " (" + std::to_string(violations) + " violations, " +
              fmt("%.1fs", seconds_since(t0)) + "); ";
  }
  ok = ok && lm.params.flat_size() == count_before;
  return {ok, detail + std::to_string(count_before) + " parameters, unchanged"};
}

Outcome determinism() {
  bool ok = true;
  for (std::uint64_t seed : {0ULL, 42ULL, 12345ULL}) {
    ok = ok && serialize_instance(generate_instance(10, 6, 6, seed)) ==
                   serialize_instance(generate_instance(10, 6, 6, seed));
    const auto inst = generate_instance(10, 6, 6, seed);
    for (Rule r : {Rule::kSpt, Rule::kLpt, Rule::kFifo})
      ok = ok && schedule_csv(run_rule(inst, r).schedule) == schedule_csv(run_rule(inst, r).schedule);
  }
  TrainConfig c;
  c.model.d_h = 8;
  c.model.heads = 2;
  c.model.d_z = 4;
  c.model.d_ff = 16;
  c.num_jobs = 2;
  c.num_machines = 2;
  c.num_vehicles = 1;
  c.epochs = 10;
  c.episodes_per_epoch = 2;
  c.batch_size = 4;
  c.validation_count = 5;
  c.validation_period = 5;
  c.seed = 99;
  const auto a = train(c);
  const auto b = train(c);
  bool logs = a.log.size() == b.log.size() && a.params == b.params;
  for (std::size_t i = 0; logs && i < a.log.size(); ++i)
    logs = a.log[i].episode == b.log[i].episode && a.log[i].mean_greedy_makespan == b.log[i].mean_greedy_makespan &&
           a.log[i].mean_sampled_makespan == b.log[i].mean_sampled_makespan && a.log[i].grad_norm == b.log[i].grad_norm;
  return {ok && logs, std::string("instances and rule schedules ") + (ok ? "identical" : "differ") +
                          ", tiny training logs and parameters " + (logs ? "identical" : "differ") +
                          " (wallclock column excluded)"};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "hgs_acceptance";
  fs::create_directories(work);
  const fs::path checkpoint = work / "medium_checkpoint.json";

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 feasibility", feasibility},
      {"2 reward telescoping", telescoping},
      {"3 oracle optimality", oracle},
      {"4 gradient correctness", gradients},
      {"5 masking exactness", masking},
      {"6a learning signal 2x2x1", learning_small},
      {"6b learning signal 5x3x3", [&] { return learning_medium(checkpoint); }},
      {"7 gap metric", gap_metric},
      {"8 scale-agnostic inference", [&] { return scale_agnostic(checkpoint); }},
      {"9 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
