#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hgs/environment.hpp"
#include "hgs/schedule.hpp"

namespace hgs {

// ---- dispatching rules ------------------------------------------------------

enum class Rule { kSpt, kLpt, kFifo };

std::string to_string(Rule rule);
Rule parse_rule(const std::string& name);  // "spt" | "lpt" | "fifo"; throws ConfigError

// Idle vehicle with the least empty travel to the job's product; lowest index
// on ties. `candidates` are feasible triples for one (job, machine).
int nearest_vehicle(const ScheduleState& state, int job, const std::vector<ActionTriple>& candidates);

// SPT / LPT choose the feasible (operation, machine) pair with the
// shortest / longest processing time. FIFO chooses the ready operation whose
// predecessor finished first, then its fastest feasible machine. Ties go to
// the lowest job and machine index. The vehicle is always the nearest one.
ActionTriple rule_step(const ScheduleState& state, Rule rule);

struct SolveResult {
  std::vector<ActionTriple> actions;
  Schedule schedule;
  Time makespan = 0;
};

SolveResult run_rule(const Instance& inst, Rule rule);

// Replays actions from the initial state; throws ContractError on an
// infeasible action.
SolveResult replay(const Instance& inst, const std::vector<ActionTriple>& actions);

// ---- genetic algorithm ------------------------------------------------------

struct GAConfig {
  int population = 40;
  int generations = 200;
  double crossover_rate = 0.8;
  double mutation_rate = 0.2;
  int tournament = 3;
  int elite = 2;
  std::uint64_t seed = 0;
  double time_budget_s = 0.0;  // 0 = generations only

  void validate() const;  // throws ConfigError
};

// Operation-based encoding: `sequence` lists each job once per operation, the
// k-th occurrence of job i standing for O_{i,k}, so any arrangement respects
// precedence. `machines` and `vehicles` are indexed by flat operation.
struct Chromosome {
  std::vector<int> sequence;
  std::vector<int> machines;
  std::vector<int> vehicles;

  friend bool operator==(const Chromosome&, const Chromosome&) = default;
};

Chromosome random_chromosome(const Instance& inst, std::mt19937_64& rng);

// Replays the chromosome through the environment. At each decision the first
// listed operation whose assigned machine and vehicle are both available is
// dispatched. If none is, the first listed ready operation goes to its
// assigned machine (or the fastest idle one) with its assigned vehicle (or
// the nearest idle one). Always feasible.
SolveResult decode_chromosome(const Instance& inst, const Chromosome& c);

struct GAResult {
  SolveResult best;
  Chromosome best_chromosome;
  std::vector<Time> best_per_generation;  // index 0 = initial population
  int generations_run = 0;
};

// `initial`, when non-empty, seeds the population (cycled if shorter).
GAResult ga_solve(const Instance& inst, const GAConfig& cfg,
                  const std::vector<Chromosome>& initial = {});

// ---- exhaustive search ------------------------------------------------------

struct ExhaustiveResult {
  SolveResult best;
  std::int64_t nodes = 0;
};

// Depth-first search over feasible triples at every decision with
// branch-and-bound. Refuses instances above `max_operations` operations.
ExhaustiveResult exhaustive_optimal(const Instance& inst, int max_operations = 8);

}  // namespace hgs
