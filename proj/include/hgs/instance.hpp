#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hgs {

using Time = std::int64_t;

// Location index into the travel matrix: 0 is the load/unload depot, machine k
// (0-based) lives at k + 1.
using Location = int;
inline constexpr Location kDepot = 0;
inline constexpr Location machine_location(int machine) { return machine + 1; }

struct MachineOption {
  int machine = 0;  // 0-based
  Time processing_time = 0;

  friend bool operator==(const MachineOption&, const MachineOption&) = default;
};

// One operation: the machines able to process it, sorted by machine index.
struct Operation {
  std::vector<MachineOption> options;

  // Processing time on `machine`, or -1 if incompatible.
  Time processing_time_on(int machine) const;
  bool compatible(int machine) const { return processing_time_on(machine) > 0; }
  double mean_processing_time() const;
  Time min_processing_time() const;
  Time max_processing_time() const;

  friend bool operator==(const Operation&, const Operation&) = default;
};

using Job = std::vector<Operation>;

// Immutable FJSPT problem description. Jobs, operations, machines and vehicles
// are 0-based in the API; the file format uses 1-based machine indices.
struct Instance {
  std::string name;
  int num_jobs = 0;
  int num_machines = 0;
  int num_vehicles = 0;
  std::vector<Job> jobs;
  // (m+1) x (m+1), symmetric, zero diagonal. Row/column 0 is the depot.
  std::vector<std::vector<Time>> travel;

  int num_operations() const;
  Time travel_time(Location from, Location to) const { return travel[from][to]; }
  // Largest processing time or travel entry; the feature normalizer.
  Time time_scale() const;

  friend bool operator==(const Instance&, const Instance&) = default;
};

// Flat operation indexing: operations of job 0 first, then job 1, ...
class OperationIndex {
 public:
  OperationIndex() = default;
  explicit OperationIndex(const Instance& inst);

  int flat(int job, int op) const { return offsets_[job] + op; }
  int job_of(int flat) const { return job_of_[flat]; }
  int op_of(int flat) const { return flat - offsets_[job_of_[flat]]; }
  int size() const { return static_cast<int>(job_of_.size()); }

 private:
  std::vector<int> offsets_;
  std::vector<int> job_of_;
};

// Throws InstanceError naming the first violated invariant.
void validate(const Instance& inst);

// Instance plus the per-operation and per-pair means the generator drew.
struct GeneratedInstance {
  Instance instance;
  std::vector<std::vector<int>> processing_means;  // [job][op]
  std::vector<int> travel_means;                   // upper-triangle pairs, row-major
};

GeneratedInstance generate_instance_detailed(int num_jobs, int num_machines, int num_vehicles,
                                             std::uint64_t seed);
Instance generate_instance(int num_jobs, int num_machines, int num_vehicles, std::uint64_t seed);

// JSON instance files. Unknown keys are rejected.
Instance parse_instance(const std::string& text);
Instance load_instance(const std::filesystem::path& path);
std::string serialize_instance(const Instance& inst);
void write_instance(const Instance& inst, const std::filesystem::path& path);

}  // namespace hgs
