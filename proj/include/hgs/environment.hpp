#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hgs/instance.hpp"

namespace hgs {

// Composite decision: operation (job, op) goes to `machine`, carried by
// `vehicle`. All indices 0-based.
struct ActionTriple {
  int job = 0;
  int op = 0;
  int machine = 0;
  int vehicle = 0;

  friend bool operator==(const ActionTriple&, const ActionTriple&) = default;
};

std::string to_string(const ActionTriple& a);

struct OperationRecord {
  bool scheduled = false;
  int machine = -1;
  int vehicle = -1;
  Location vehicle_origin = kDepot;   // where the vehicle was when dispatched
  Location pickup_location = kDepot;  // where the product waited
  Time off_load_start = 0;            // vehicle leaves its location
  Time pickup = 0;                    // vehicle reaches the product
  Time arrival = 0;                   // product delivered to the machine
  Time start = 0;
  Time completion = 0;
};

// Mutable simulation state. Holds a non-owning pointer to its instance, which
// must outlive it. Copying is cheap enough for tree search on small instances.
struct ScheduleState {
  const Instance* inst = nullptr;
  OperationIndex index;
  Time clock = 0;
  int scheduled_count = 0;
  std::vector<int> next_op;                // per job: first unscheduled operation
  std::vector<Location> product_location;  // per job: where the product is headed/sits
  std::vector<Time> machine_free;          // busy-until per machine
  std::vector<Time> vehicle_free;          // busy-until per vehicle
  std::vector<Location> vehicle_location;  // location after the current/last transport
  std::vector<OperationRecord> ops;        // flat operation index
  // Lower bounds are tracked as integers scaled by this common denominator of
  // all mean processing times, so rewards telescope exactly.
  std::int64_t lb_denominator = 1;

  const Instance& instance() const { return *inst; }
  bool terminal() const { return scheduled_count == static_cast<int>(ops.size()); }
  const OperationRecord& record(int job, int op) const { return ops[index.flat(job, op)]; }
  // Completion time of the job's last scheduled operation (0 if none).
  Time job_ready_time(int job) const;
  // Fraction of [0, clock) the machine spent processing; 0 at clock 0.
  double machine_utilization(int machine) const;
};

struct StepOutcome {
  double reward = 0.0;               // C_LB(s_t) - C_LB(s_{t+1}) in time units
  std::int64_t reward_scaled = 0;    // same, times lb_denominator (exact)
  bool done = false;
  Time clock = 0;                    // next decision clock
};

ScheduleState reset(const Instance& inst);

// Triples feasible at the current clock, ordered by (job, machine, vehicle).
// Throws ContractError on a terminal state.
std::vector<ActionTriple> feasible_actions(const ScheduleState& state);
// Cheap check used by tree search and the clock loop.
bool has_feasible_action(const ScheduleState& state);

// Explains why `a` is infeasible, or returns an empty string.
std::string infeasibility_reason(const ScheduleState& state, const ActionTriple& a);

// Moves the clock to the earliest event time at which some action becomes
// feasible. Throws DeadlockError if there is none.
Time advance_clock(ScheduleState& state);

// Applies the transport and processing of `a` without moving the clock.
void commit_action(ScheduleState& state, const ActionTriple& a);

// Full MDP transition: commit, compute reward, advance the clock until a
// decision is possible again (or the episode ends).
StepOutcome apply_action(ScheduleState& state, const ActionTriple& a);

// Estimated makespan: max over operations of the recursive completion lower
// bound (actual completion for scheduled operations, predecessor bound plus
// mean processing time otherwise). Ignores transport.
double makespan_lower_bound(const ScheduleState& state);
std::int64_t makespan_lower_bound_scaled(const ScheduleState& state);

// Actual makespan of everything scheduled so far.
Time current_makespan(const ScheduleState& state);

}  // namespace hgs
