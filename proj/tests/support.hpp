#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hgs/environment.hpp"
#include "hgs/instance.hpp"
#include "hgs/parameters.hpp"
#include "hgs/schedule.hpp"
#include "hgs/tensor.hpp"

namespace hgs::test {

// Builds an instance from 1-based machine lists: jobs[i][j] = {{machine, time}, ...}.
inline Instance make_instance(int m, int v, const std::vector<std::vector<std::vector<std::pair<int, Time>>>>& jobs,
                              const std::vector<std::vector<Time>>& travel) {
  Instance inst;
  inst.name = "fixture";
  inst.num_jobs = static_cast<int>(jobs.size());
  inst.num_machines = m;
  inst.num_vehicles = v;
  for (const auto& job : jobs) {
    Job j;
    for (const auto& op : job) {
      Operation o;
      for (const auto& [k, t] : op) o.options.push_back({k - 1, t});
      j.push_back(o);
    }
    inst.jobs.push_back(j);
  }
  inst.travel = travel;
  validate(inst);
  return inst;
}

inline std::vector<std::vector<Time>> zero_travel(int m) {
  return std::vector<std::vector<Time>>(m + 1, std::vector<Time>(m + 1, 0));
}

struct RandomEpisode {
  std::vector<ActionTriple> actions;
  std::vector<std::int64_t> rewards_scaled;
  std::vector<Time> clocks;
  std::int64_t initial_lb_scaled = 0;
  std::int64_t lb_denominator = 1;
  Schedule schedule;
};

// Uniformly random feasible action at every decision.
inline RandomEpisode random_episode(const Instance& inst, std::mt19937_64& rng) {
  RandomEpisode e;
  ScheduleState s = reset(inst);
  e.initial_lb_scaled = makespan_lower_bound_scaled(s);
  e.lb_denominator = s.lb_denominator;
  while (!s.terminal()) {
    const auto acts = feasible_actions(s);
    std::uniform_int_distribution<std::size_t> pick(0, acts.size() - 1);
    const auto a = acts[pick(rng)];
    e.clocks.push_back(s.clock);
    e.actions.push_back(a);
    e.rewards_scaled.push_back(apply_action(s, a).reward_scaled);
  }
  e.schedule = final_schedule(s);
  return e;
}

inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

// Compares backward() of `loss` against central differences over every
// entry of `store`.
inline GradCheck gradient_check(ParameterStore& store, const std::function<Var(Tape&)>& loss,
                                double h = 1e-6) {
  store.zero_grad();
  {
    Tape tape(true);
    tape.backward(loss(tape));
  }
  GradCheck r;
  for (std::size_t i = 0; i < store.flat_size(); ++i) {
    const double v = store.get(i);
    store.set(i, v + h);
    Tape up(false);
    const double f_up = loss(up).scalar();
    store.set(i, v - h);
    Tape down(false);
    const double f_down = loss(down).scalar();
    store.set(i, v);
    const double numeric = (f_up - f_down) / (2.0 * h);
    const double err = relative_error(store.grad(i), numeric);
    ++r.checked;
    if (err > r.max_rel_error) {
      r.max_rel_error = err;
      r.worst = store.describe(i);
    }
  }
  return r;
}

inline Tensor2 random_matrix(int r, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor2 t(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) t(i, j) = u(rng);
  return t;
}

// Gradient check of one primitive: random inputs become parameters and the
// loss is sum(out .* W) for a fixed random W.
inline GradCheck primitive_gradient_check(const std::vector<std::pair<int, int>>& shapes,
                                          const std::function<Var(const std::vector<Var>&)>& f,
                                          std::uint64_t seed = 1) {
  std::vector<ParameterShape> table;
  for (std::size_t i = 0; i < shapes.size(); ++i)
    table.push_back({"x" + std::to_string(i), shapes[i].first, shapes[i].second, 1});
  auto store = init_parameters(table, seed);
  std::mt19937_64 rng(seed + 100);
  for (int i = 0; i < store.count(); ++i) store.at(i).value = random_matrix(shapes[i].first, shapes[i].second, rng);

  Tensor2 weights;
  auto loss = [&](Tape& tape) {
    std::vector<Var> in;
    for (int i = 0; i < store.count(); ++i) in.push_back(tape.parameter(store, i));
    const Var out = f(in);
    if (weights.size() == 0)
      weights = random_matrix(static_cast<int>(out.rows()), static_cast<int>(out.cols()), rng);
    return sum_all(mul_const(out, weights));
  };
  return gradient_check(store, loss);
}

}  // namespace hgs::test
