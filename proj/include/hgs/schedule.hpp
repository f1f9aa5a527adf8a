#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hgs/environment.hpp"

namespace hgs {

struct ScheduledOperation {
  int job = 0;
  int op = 0;
  int machine = 0;
  int vehicle = 0;
  Time off_load_start = 0;
  Time arrival = 0;
  Time start = 0;
  Time completion = 0;

  friend bool operator==(const ScheduledOperation&, const ScheduledOperation&) = default;
};

struct TransportTask {
  int job = 0;
  int op = 0;
  Location from = kDepot;    // vehicle position at dispatch
  Location pickup = kDepot;  // product position
  Location to = kDepot;      // destination machine location
  Time depart = 0;
  Time arrival = 0;

  friend bool operator==(const TransportTask&, const TransportTask&) = default;
};

struct Schedule {
  std::vector<ScheduledOperation> operations;        // flat operation order
  std::vector<std::vector<TransportTask>> vehicles;  // per vehicle, by departure
  Time makespan = 0;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

// Throws ContractError unless the state is terminal.
Schedule final_schedule(const ScheduleState& state);

// Independent feasibility check of a complete schedule against the instance:
// compatibility, processing durations, precedence, machine and vehicle
// exclusivity, and transport timing reconstructed from each vehicle's route.
// Returns one message per violation; empty means feasible.
std::vector<std::string> check_schedule(const Instance& inst, const Schedule& schedule);

// CSV columns: job,op,machine,vehicle,off_load_start,arrival,start,completion
// (job, op, machine and vehicle are written 1-based).
std::string schedule_csv(const Schedule& schedule);
void write_schedule_csv(const Schedule& schedule, const std::filesystem::path& path);

// Gantt chart: one lane per machine, then one per vehicle.
std::string schedule_svg(const Instance& inst, const Schedule& schedule);
void write_schedule_svg(const Instance& inst, const Schedule& schedule,
                        const std::filesystem::path& path);

}  // namespace hgs
