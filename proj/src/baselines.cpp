#include "hgs/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>

#include "hgs/errors.hpp"

namespace hgs {

std::string to_string(Rule rule) {
  switch (rule) {
    case Rule::kSpt: return "spt";
    case Rule::kLpt: return "lpt";
    case Rule::kFifo: return "fifo";
  }
  return "?";
}

Rule parse_rule(const std::string& name) {
  if (name == "spt") return Rule::kSpt;
  if (name == "lpt") return Rule::kLpt;
  if (name == "fifo") return Rule::kFifo;
  throw ConfigError("unknown rule '" + name + "' (expected spt, lpt or fifo)");
}

int nearest_vehicle(const ScheduleState& s, int job, const std::vector<ActionTriple>& candidates) {
  const Instance& inst = s.instance();
  const Location product = s.product_location[job];
  int best = -1;
  Time best_travel = std::numeric_limits<Time>::max();
  for (const auto& a : candidates) {
    const Time t = inst.travel_time(s.vehicle_location[a.vehicle], product);
    if (t < best_travel || (t == best_travel && a.vehicle < best)) {
      best = a.vehicle;
      best_travel = t;
    }
  }
  if (best < 0) throw ContractError("nearest_vehicle: no candidate vehicle");
  return best;
}

ActionTriple rule_step(const ScheduleState& s, Rule rule) {
  const auto acts = feasible_actions(s);
  if (acts.empty()) throw ContractError("rule_step: no feasible action");
  const Instance& inst = s.instance();
  auto processing = [&](const ActionTriple& a) {
    return inst.jobs[a.job][a.op].processing_time_on(a.machine);
  };

  int job = -1;
  int machine = -1;
  if (rule == Rule::kFifo) {
    Time earliest = std::numeric_limits<Time>::max();
    for (const auto& a : acts) {
      const Time ready = s.job_ready_time(a.job);
      if (ready < earliest) {
        earliest = ready;
        job = a.job;
      }
    }
    Time fastest = std::numeric_limits<Time>::max();
    for (const auto& a : acts) {
      if (a.job == job && processing(a) < fastest) {
        fastest = processing(a);
        machine = a.machine;
      }
    }
  } else {
    Time best = 0;
    for (const auto& a : acts) {
      const Time p = processing(a);
      const bool better = job < 0 || (rule == Rule::kSpt ? p < best : p > best);
      if (better) {
        best = p;
        job = a.job;
        machine = a.machine;
      }
    }
  }

  std::vector<ActionTriple> candidates;
  for (const auto& a : acts)
    if (a.job == job && a.machine == machine) candidates.push_back(a);
  return ActionTriple{job, s.next_op[job], machine, nearest_vehicle(s, job, candidates)};
}

namespace {

SolveResult finish(const ScheduleState& s, std::vector<ActionTriple> actions) {
  SolveResult r;
  r.actions = std::move(actions);
  r.schedule = final_schedule(s);
  r.makespan = r.schedule.makespan;
  return r;
}

bool feasible_now(const ScheduleState& s, const ActionTriple& a) {
  const Instance& inst = s.instance();
  return s.next_op[a.job] == a.op && a.op < static_cast<int>(inst.jobs[a.job].size()) &&
         s.job_ready_time(a.job) <= s.clock && inst.jobs[a.job][a.op].compatible(a.machine) &&
         s.machine_free[a.machine] <= s.clock && s.vehicle_free[a.vehicle] <= s.clock;
}

}  // namespace

SolveResult run_rule(const Instance& inst, Rule rule) {
  ScheduleState s = reset(inst);
  std::vector<ActionTriple> actions;
  while (!s.terminal()) {
    actions.push_back(rule_step(s, rule));
    apply_action(s, actions.back());
  }
  return finish(s, std::move(actions));
}

SolveResult replay(const Instance& inst, const std::vector<ActionTriple>& actions) {
  ScheduleState s = reset(inst);
  for (const auto& a : actions) {
    if (s.terminal()) throw ContractError("replay: actions continue past the end of the episode");
    apply_action(s, a);
  }
  if (!s.terminal()) throw ContractError("replay: actions end before the episode");
  return finish(s, actions);
}

// ---- genetic algorithm ------------------------------------------------------

void GAConfig::validate() const {
  if (population < 2) throw ConfigError("ga.population: must be at least 2");
  if (generations < 0) throw ConfigError("ga.generations: must not be negative");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
    throw ConfigError("ga.crossover_rate: must lie in [0, 1]");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0))
    throw ConfigError("ga.mutation_rate: must lie in [0, 1]");
  if (tournament < 1) throw ConfigError("ga.tournament: must be positive");
  if (elite < 0 || elite > population) throw ConfigError("ga.elite: must lie in [0, population]");
  if (time_budget_s < 0.0) throw ConfigError("ga.time_budget_s: must not be negative");
}

Chromosome random_chromosome(const Instance& inst, std::mt19937_64& rng) {
  Chromosome c;
  const OperationIndex index(inst);
  for (int i = 0; i < inst.num_jobs; ++i)
    for (std::size_t j = 0; j < inst.jobs[i].size(); ++j) c.sequence.push_back(i);
  std::shuffle(c.sequence.begin(), c.sequence.end(), rng);
  c.machines.resize(index.size());
  c.vehicles.resize(index.size());
  std::uniform_int_distribution<int> vehicle(0, inst.num_vehicles - 1);
  for (int f = 0; f < index.size(); ++f) {
    const auto& opts = inst.jobs[index.job_of(f)][index.op_of(f)].options;
    std::uniform_int_distribution<int> pick(0, static_cast<int>(opts.size()) - 1);
    c.machines[f] = opts[pick(rng)].machine;
    c.vehicles[f] = vehicle(rng);
  }
  return c;
}

SolveResult decode_chromosome(const Instance& inst, const Chromosome& c) {
  ScheduleState s = reset(inst);
  const int n = s.index.size();
  if (static_cast<int>(c.sequence.size()) != n || static_cast<int>(c.machines.size()) != n ||
      static_cast<int>(c.vehicles.size()) != n)
    throw ContractError("decode_chromosome: chromosome does not match the instance");
  // Flat operation of every gene.
  std::vector<int> gene_op(n);
  {
    std::vector<int> seen(inst.num_jobs, 0);
    for (int g = 0; g < n; ++g) {
      const int job = c.sequence[g];
      gene_op[g] = s.index.flat(job, seen[job]++);
    }
  }

  std::vector<ActionTriple> actions;
  while (!s.terminal()) {
    bool found = false;
    ActionTriple pick;
    for (int g = 0; g < n && !found; ++g) {
      const int f = gene_op[g];
      if (s.ops[f].scheduled) continue;
      const ActionTriple a{s.index.job_of(f), s.index.op_of(f), c.machines[f], c.vehicles[f]};
      if (feasible_now(s, a)) {
        pick = a;
        found = true;
      }
    }
    if (!found) {
      const auto acts = feasible_actions(s);
      for (int g = 0; g < n && !found; ++g) {
        const int f = gene_op[g];
        const int job = s.index.job_of(f);
        if (s.ops[f].scheduled) continue;
        std::vector<ActionTriple> mine;
        for (const auto& a : acts)
          if (a.job == job) mine.push_back(a);
        if (mine.empty()) continue;
        int machine = -1;
        Time fastest = std::numeric_limits<Time>::max();
        const auto& op = inst.jobs[job][s.index.op_of(f)];
        for (const auto& a : mine) {
          if (a.machine == c.machines[f]) {
            machine = a.machine;
            break;
          }
          if (op.processing_time_on(a.machine) < fastest) {
            fastest = op.processing_time_on(a.machine);
            machine = a.machine;
          }
        }
        std::vector<ActionTriple> on_machine;
        for (const auto& a : mine)
          if (a.machine == machine) on_machine.push_back(a);
        int vehicle = -1;
        for (const auto& a : on_machine)
          if (a.vehicle == c.vehicles[f]) vehicle = a.vehicle;
        if (vehicle < 0) vehicle = nearest_vehicle(s, job, on_machine);
        pick = ActionTriple{job, s.index.op_of(f), machine, vehicle};
        found = true;
      }
    }
    if (!found) throw ContractError("decode_chromosome: no dispatchable operation");
    actions.push_back(pick);
    apply_action(s, pick);
  }
  return finish(s, std::move(actions));
}

namespace {

struct Individual {
  Chromosome genes;
  SolveResult result;
};

Chromosome crossover(const Chromosome& a, const Chromosome& b, const Instance& inst,
                     std::mt19937_64& rng) {
  const int n = static_cast<int>(a.sequence.size());
  Chromosome child;
  std::uniform_int_distribution<int> cut_dist(0, n);
  // Sequence: prefix of a, remainder in b's order with per-job counts
  // repaired so every job keeps its operation count.
  const int cut = cut_dist(rng);
  std::vector<int> remaining(inst.num_jobs);
  for (int i = 0; i < inst.num_jobs; ++i) remaining[i] = static_cast<int>(inst.jobs[i].size());
  for (int g = 0; g < cut; ++g) {
    child.sequence.push_back(a.sequence[g]);
    --remaining[a.sequence[g]];
  }
  for (int job : b.sequence) {
    if (remaining[job] > 0) {
      child.sequence.push_back(job);
      --remaining[job];
    }
  }
  const int mcut = cut_dist(rng);
  const int vcut = cut_dist(rng);
  child.machines.resize(n);
  child.vehicles.resize(n);
  for (int f = 0; f < n; ++f) {
    child.machines[f] = f < mcut ? a.machines[f] : b.machines[f];
    child.vehicles[f] = f < vcut ? a.vehicles[f] : b.vehicles[f];
  }
  return child;
}

void mutate(Chromosome& c, const Instance& inst, const OperationIndex& index, std::mt19937_64& rng) {
  const int n = static_cast<int>(c.sequence.size());
  std::uniform_int_distribution<int> pos(0, n - 1);
  std::uniform_int_distribution<int> kind(0, 2);
  switch (kind(rng)) {
    case 0: {
      std::swap(c.sequence[pos(rng)], c.sequence[pos(rng)]);
      break;
    }
    case 1: {
      const int f = pos(rng);
      const auto& opts = inst.jobs[index.job_of(f)][index.op_of(f)].options;
      std::uniform_int_distribution<int> pick(0, static_cast<int>(opts.size()) - 1);
      c.machines[f] = opts[pick(rng)].machine;
      break;
    }
    default: {
      std::uniform_int_distribution<int> vehicle(0, inst.num_vehicles - 1);
      c.vehicles[pos(rng)] = vehicle(rng);
      break;
    }
  }
}

const Individual& tournament_pick(const std::vector<Individual>& pop, int size, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> any(0, pop.size() - 1);
  const Individual* best = &pop[any(rng)];
  for (int t = 1; t < size; ++t) {
    const Individual& cand = pop[any(rng)];
    if (cand.result.makespan < best->result.makespan) best = &cand;
  }
  return *best;
}

}  // namespace

GAResult ga_solve(const Instance& inst, const GAConfig& cfg, const std::vector<Chromosome>& initial) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto out_of_time = [&] {
    return cfg.time_budget_s > 0.0 &&
           std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >=
               cfg.time_budget_s;
  };
  std::mt19937_64 rng(cfg.seed);
  const OperationIndex index(inst);
  auto by_makespan = [](const Individual& a, const Individual& b) {
    return a.result.makespan < b.result.makespan;
  };

  std::vector<Individual> pop;
  for (int p = 0; p < cfg.population; ++p) {
    Chromosome c = initial.empty() ? random_chromosome(inst, rng) : initial[p % initial.size()];
    SolveResult r = decode_chromosome(inst, c);
    pop.push_back({std::move(c), std::move(r)});
  }
  std::stable_sort(pop.begin(), pop.end(), by_makespan);

  GAResult res;
  res.best = pop.front().result;
  res.best_chromosome = pop.front().genes;
  res.best_per_generation.push_back(res.best.makespan);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  for (int gen = 0; gen < cfg.generations && !out_of_time(); ++gen) {
    std::vector<Individual> next(pop.begin(), pop.begin() + cfg.elite);
    while (static_cast<int>(next.size()) < cfg.population) {
      const Individual& a = tournament_pick(pop, cfg.tournament, rng);
      const Individual& b = tournament_pick(pop, cfg.tournament, rng);
      Chromosome child = coin(rng) < cfg.crossover_rate ? crossover(a.genes, b.genes, inst, rng) : a.genes;
      if (coin(rng) < cfg.mutation_rate) mutate(child, inst, index, rng);
      SolveResult r = decode_chromosome(inst, child);
      next.push_back({std::move(child), std::move(r)});
    }
    pop = std::move(next);
    std::stable_sort(pop.begin(), pop.end(), by_makespan);
    if (pop.front().result.makespan < res.best.makespan) {
      res.best = pop.front().result;
      res.best_chromosome = pop.front().genes;
    }
    res.best_per_generation.push_back(res.best.makespan);
    res.generations_run = gen + 1;
  }
  return res;
}

// ---- exhaustive search ------------------------------------------------------

namespace {

// No schedule reachable from `s` finishes before this.
Time completion_bound(const ScheduleState& s) {
  const Instance& inst = s.instance();
  Time bound = current_makespan(s);
  for (int i = 0; i < inst.num_jobs; ++i) {
    Time t = s.job_ready_time(i);
    for (std::size_t j = s.next_op[i]; j < inst.jobs[i].size(); ++j)
      t += inst.jobs[i][j].min_processing_time();
    bound = std::max(bound, t);
  }
  return bound;
}

struct Search {
  Time best = 0;
  std::vector<ActionTriple> best_actions;
  std::vector<ActionTriple> path;
  std::int64_t nodes = 0;

  void visit(const ScheduleState& s) {
    ++nodes;
    if (s.terminal()) {
      const Time ms = current_makespan(s);
      if (ms < best) {
        best = ms;
        best_actions = path;
      }
      return;
    }
    if (completion_bound(s) >= best) return;
    for (const auto& a : feasible_actions(s)) {
      ScheduleState child = s;
      apply_action(child, a);
      path.push_back(a);
      visit(child);
      path.pop_back();
    }
  }
};

}  // namespace

ExhaustiveResult exhaustive_optimal(const Instance& inst, int max_operations) {
  const int ops = inst.num_operations();
  if (ops > max_operations)
    throw ContractError("exhaustive_optimal: " + std::to_string(ops) + " operations exceed the cap of " +
                        std::to_string(max_operations));
  // Start from the best rule so the bound prunes from the first branch.
  SolveResult incumbent = run_rule(inst, Rule::kSpt);
  for (Rule r : {Rule::kLpt, Rule::kFifo}) {
    SolveResult alt = run_rule(inst, r);
    if (alt.makespan < incumbent.makespan) incumbent = std::move(alt);
  }
  Search search;
  search.best = incumbent.makespan;
  search.best_actions = incumbent.actions;
  search.visit(reset(inst));
  ExhaustiveResult res;
  res.best = replay(inst, search.best_actions);
  res.nodes = search.nodes;
  return res;
}

}  // namespace hgs
