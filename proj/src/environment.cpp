#include "hgs/environment.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "hgs/errors.hpp"

namespace hgs {

std::string to_string(const ActionTriple& a) {
  return "(O" + std::to_string(a.job + 1) + "," + std::to_string(a.op + 1) + ", M" +
         std::to_string(a.machine + 1) + ", V" + std::to_string(a.vehicle + 1) + ")";
}

Time ScheduleState::job_ready_time(int job) const {
  const int done = next_op[job];
  return done == 0 ? 0 : ops[index.flat(job, done - 1)].completion;
}

double ScheduleState::machine_utilization(int machine) const {
  if (clock <= 0) return 0.0;
  Time busy = 0;
  for (const auto& rec : ops) {
    if (!rec.scheduled || rec.machine != machine) continue;
    const Time lo = std::min(rec.start, clock);
    const Time hi = std::min(rec.completion, clock);
    busy += hi - lo;
  }
  return static_cast<double>(busy) / static_cast<double>(clock);
}

ScheduleState reset(const Instance& inst) {
  ScheduleState s;
  s.inst = &inst;
  s.index = OperationIndex(inst);
  s.next_op.assign(inst.num_jobs, 0);
  s.product_location.assign(inst.num_jobs, kDepot);
  s.machine_free.assign(inst.num_machines, 0);
  s.vehicle_free.assign(inst.num_vehicles, 0);
  s.vehicle_location.assign(inst.num_vehicles, kDepot);
  s.ops.assign(inst.num_operations(), OperationRecord{});

  // Exact when the lcm of machine-set sizes stays small; otherwise a fixed
  // fine grid (means rounded to 1/720720). Rewards telescope either way.
  std::int64_t denom = 1;
  for (const auto& job : inst.jobs) {
    for (const auto& op : job) {
      denom = std::lcm(denom, static_cast<std::int64_t>(op.options.size()));
      if (denom > (std::int64_t{1} << 40)) denom = 720720;
    }
  }
  s.lb_denominator = denom;
  return s;
}

std::string infeasibility_reason(const ScheduleState& state, const ActionTriple& a) {
  const Instance& inst = state.instance();
  if (state.terminal()) return "state is terminal";
  if (a.job < 0 || a.job >= inst.num_jobs) return "job index out of range";
  if (a.machine < 0 || a.machine >= inst.num_machines) return "machine index out of range";
  if (a.vehicle < 0 || a.vehicle >= inst.num_vehicles) return "vehicle index out of range";
  const int next = state.next_op[a.job];
  if (next >= static_cast<int>(inst.jobs[a.job].size())) return "job already fully scheduled";
  if (a.op != next) return "operation is not the job's next unscheduled operation";
  if (state.job_ready_time(a.job) > state.clock) return "predecessor not completed by the clock";
  if (!inst.jobs[a.job][a.op].compatible(a.machine)) return "machine not in the compatible set";
  if (state.machine_free[a.machine] > state.clock) return "machine busy at the clock";
  if (state.vehicle_free[a.vehicle] > state.clock) return "vehicle busy at the clock";
  return {};
}

namespace {

template <typename Visit>
void for_each_feasible(const ScheduleState& s, Visit&& visit) {
  const Instance& inst = s.instance();
  for (int i = 0; i < inst.num_jobs; ++i) {
    const int j = s.next_op[i];
    if (j >= static_cast<int>(inst.jobs[i].size())) continue;
    if (s.job_ready_time(i) > s.clock) continue;
    for (const auto& opt : inst.jobs[i][j].options) {
      if (s.machine_free[opt.machine] > s.clock) continue;
      for (int u = 0; u < inst.num_vehicles; ++u) {
        if (s.vehicle_free[u] > s.clock) continue;
        if (!visit(ActionTriple{i, j, opt.machine, u})) return;
      }
    }
  }
}

}  // namespace

std::vector<ActionTriple> feasible_actions(const ScheduleState& state) {
  if (state.terminal()) throw ContractError("feasible_actions called on a terminal state");
  std::vector<ActionTriple> out;
  for_each_feasible(state, [&](const ActionTriple& a) {
    out.push_back(a);
    return true;
  });
  return out;
}

bool has_feasible_action(const ScheduleState& state) {
  bool any = false;
  for_each_feasible(state, [&](const ActionTriple&) {
    any = true;
    return false;
  });
  return any;
}

Time advance_clock(ScheduleState& state) {
  if (state.terminal()) throw ContractError("advance_clock called on a terminal state");
  if (has_feasible_action(state)) return state.clock;

  std::vector<Time> events;
  for (Time t : state.machine_free)
    if (t > state.clock) events.push_back(t);
  for (Time t : state.vehicle_free)
    if (t > state.clock) events.push_back(t);
  for (const auto& rec : state.ops)
    if (rec.scheduled && rec.completion > state.clock) events.push_back(rec.completion);
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());

  for (Time t : events) {
    state.clock = t;
    if (has_feasible_action(state)) return t;
  }
  throw DeadlockError("no future event can enable an action at clock " +
                      std::to_string(state.clock));
}

void commit_action(ScheduleState& state, const ActionTriple& a) {
  if (auto why = infeasibility_reason(state, a); !why.empty())
    throw ContractError("infeasible action " + to_string(a) + ": " + why);

  const Instance& inst = state.instance();
  auto& rec = state.ops[state.index.flat(a.job, a.op)];
  const Location dest = machine_location(a.machine);
  rec.scheduled = true;
  rec.machine = a.machine;
  rec.vehicle = a.vehicle;
  rec.vehicle_origin = state.vehicle_location[a.vehicle];
  rec.pickup_location = state.product_location[a.job];
  rec.off_load_start = state.clock;
  rec.pickup = rec.off_load_start + inst.travel_time(rec.vehicle_origin, rec.pickup_location);
  rec.arrival = rec.pickup + inst.travel_time(rec.pickup_location, dest);
  rec.start = std::max(rec.arrival, state.machine_free[a.machine]);
  rec.completion = rec.start + inst.jobs[a.job][a.op].processing_time_on(a.machine);

  state.vehicle_free[a.vehicle] = rec.arrival;
  state.vehicle_location[a.vehicle] = dest;
  state.machine_free[a.machine] = rec.completion;
  state.product_location[a.job] = dest;
  state.next_op[a.job] += 1;
  state.scheduled_count += 1;
}

StepOutcome apply_action(ScheduleState& state, const ActionTriple& a) {
  const std::int64_t before = makespan_lower_bound_scaled(state);
  commit_action(state, a);
  const std::int64_t after = makespan_lower_bound_scaled(state);

  StepOutcome out;
  out.reward_scaled = before - after;
  out.reward = static_cast<double>(out.reward_scaled) / static_cast<double>(state.lb_denominator);
  out.done = state.terminal();
  if (!out.done) advance_clock(state);
  out.clock = state.clock;
  return out;
}

std::int64_t makespan_lower_bound_scaled(const ScheduleState& state) {
  const Instance& inst = state.instance();
  const std::int64_t denom = state.lb_denominator;
  std::int64_t best = 0;
  for (int i = 0; i < inst.num_jobs; ++i) {
    std::int64_t bound = 0;
    for (int j = 0; j < static_cast<int>(inst.jobs[i].size()); ++j) {
      const auto& rec = state.record(i, j);
      if (rec.scheduled) {
        bound = rec.completion * denom;
      } else {
        const auto& opts = inst.jobs[i][j].options;
        std::int64_t sum = 0;
        for (const auto& o : opts) sum += o.processing_time;
        const auto count = static_cast<std::int64_t>(opts.size());
        bound += (sum * denom + count / 2) / count;
      }
    }
    best = std::max(best, bound);
  }
  return best;
}

double makespan_lower_bound(const ScheduleState& state) {
  return static_cast<double>(makespan_lower_bound_scaled(state)) /
         static_cast<double>(state.lb_denominator);
}

Time current_makespan(const ScheduleState& state) {
  Time best = 0;
  for (const auto& rec : state.ops)
    if (rec.scheduled) best = std::max(best, rec.completion);
  return best;
}

}  // namespace hgs
