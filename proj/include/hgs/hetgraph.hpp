#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hgs/environment.hpp"
#include "hgs/tensor.hpp"

namespace hgs {

inline constexpr int kOpFeatures = 7;
inline constexpr int kMachineFeatures = 4;
inline constexpr int kVehicleFeatures = 4;

// Raw tensors of the dynamic heterogeneous graph at one decision step.
// Time-valued entries are divided by `scale`.
//
// op_feats columns:      status, |N_m(O)|, |N_v(O)|, processing time,
//                        remaining ops in job, job completion (actual or
//                        estimate), start time (actual or estimate)
// mach_feats columns:    status, |N(M)|, available time, utilization
// veh_feats columns:     status, |N(V)|, available time, location / m
struct HeteroGraphFeatures {
  Tensor2 op_feats;
  Tensor2 mach_feats;
  Tensor2 veh_feats;
  Tensor2 edge_om;  // |O| x m processing time (0 where incompatible)
  Mask mask_om;     // current O-M edges
  Tensor2 edge_ov;  // |O| x v off-load time from vehicle to product
  Mask mask_ov;     // current O-V edges
  Tensor2 edge_mm;  // m x m on-load time between machines (static, all edges)
  double scale = 1.0;

  int num_ops() const { return static_cast<int>(op_feats.rows()); }
  int num_machines() const { return static_cast<int>(mach_feats.rows()); }
  int num_vehicles() const { return static_cast<int>(veh_feats.rows()); }
};

struct NeighborCounts {
  std::vector<int> op_machines;  // |N_m(O)| per operation
  std::vector<int> op_vehicles;  // |N_v(O)| per operation
  std::vector<int> machine_ops;  // |N(M)| per machine
  std::vector<int> vehicle_ops;  // |N(V)| per vehicle
};

// Dynamic edge sets. An unscheduled operation links to its idle compatible
// machines and to every idle vehicle. A scheduled operation keeps only its
// chosen machine and vehicle until it completes, then has no edges.
Mask op_machine_mask(const ScheduleState& state);
Mask op_vehicle_mask(const ScheduleState& state);

// Row/column sums of the dynamic edge masks.
NeighborCounts neighbor_counts(const ScheduleState& state);

HeteroGraphFeatures featurize(const ScheduleState& state);

// Estimated job completion: last finished completion plus mean processing
// times of the job's unfinished operations; the actual value once done.
double estimated_job_completion(const ScheduleState& state, int job);
// Start time (actual if scheduled, else last finished completion plus mean
// processing times of the operations in between).
double estimated_start(const ScheduleState& state, int job, int op);

nlohmann::json features_to_json(const HeteroGraphFeatures& f);

}  // namespace hgs
