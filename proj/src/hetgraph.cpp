#include "hgs/hetgraph.hpp"

namespace hgs {

using nlohmann::json;

namespace {

bool finished(const ScheduleState& s, const OperationRecord& rec) {
  return rec.scheduled && rec.completion <= s.clock;
}

// Index of the last finished operation of a job, or -1.
int last_finished(const ScheduleState& s, int job) {
  int last = -1;
  const int ops = static_cast<int>(s.instance().jobs[job].size());
  for (int j = 0; j < ops; ++j) {
    if (!finished(s, s.record(job, j))) break;
    last = j;
  }
  return last;
}

// Where the product of (job, op) waits before that operation's transport.
Location product_location_for(const ScheduleState& s, int job, int op) {
  const auto& rec = s.record(job, op);
  if (rec.scheduled) return rec.pickup_location;
  if (op == 0) return kDepot;
  const auto& pred = s.record(job, op - 1);
  return pred.scheduled ? machine_location(pred.machine) : s.product_location[job];
}

}  // namespace

Mask op_machine_mask(const ScheduleState& s) {
  const Instance& inst = s.instance();
  Mask mask = Mask::Constant(s.index.size(), inst.num_machines, false);
  for (int f = 0; f < s.index.size(); ++f) {
    const auto& rec = s.ops[f];
    if (rec.scheduled) {
      if (rec.completion > s.clock) mask(f, rec.machine) = true;
      continue;
    }
    for (const auto& opt : inst.jobs[s.index.job_of(f)][s.index.op_of(f)].options)
      mask(f, opt.machine) = s.machine_free[opt.machine] <= s.clock;
  }
  return mask;
}

Mask op_vehicle_mask(const ScheduleState& s) {
  const Instance& inst = s.instance();
  Mask mask = Mask::Constant(s.index.size(), inst.num_vehicles, false);
  for (int f = 0; f < s.index.size(); ++f) {
    const auto& rec = s.ops[f];
    if (rec.scheduled) {
      if (rec.completion > s.clock) mask(f, rec.vehicle) = true;
      continue;
    }
    for (int u = 0; u < inst.num_vehicles; ++u) mask(f, u) = s.vehicle_free[u] <= s.clock;
  }
  return mask;
}

NeighborCounts neighbor_counts(const ScheduleState& state) {
  const Mask om = op_machine_mask(state);
  const Mask ov = op_vehicle_mask(state);
  NeighborCounts c;
  for (Eigen::Index f = 0; f < om.rows(); ++f) {
    c.op_machines.push_back(static_cast<int>(om.row(f).count()));
    c.op_vehicles.push_back(static_cast<int>(ov.row(f).count()));
  }
  for (Eigen::Index k = 0; k < om.cols(); ++k) c.machine_ops.push_back(static_cast<int>(om.col(k).count()));
  for (Eigen::Index u = 0; u < ov.cols(); ++u) c.vehicle_ops.push_back(static_cast<int>(ov.col(u).count()));
  return c;
}

double estimated_job_completion(const ScheduleState& s, int job) {
  const auto& ops = s.instance().jobs[job];
  const int last = last_finished(s, job);
  double value = last >= 0 ? static_cast<double>(s.record(job, last).completion) : 0.0;
  for (int j = last + 1; j < static_cast<int>(ops.size()); ++j) value += ops[j].mean_processing_time();
  return value;
}

double estimated_start(const ScheduleState& s, int job, int op) {
  const auto& rec = s.record(job, op);
  if (rec.scheduled) return static_cast<double>(rec.start);
  const auto& ops = s.instance().jobs[job];
  const int last = last_finished(s, job);
  double value = last >= 0 ? static_cast<double>(s.record(job, last).completion) : 0.0;
  for (int z = last + 1; z < op; ++z) value += ops[z].mean_processing_time();
  return value;
}

HeteroGraphFeatures featurize(const ScheduleState& s) {
  const Instance& inst = s.instance();
  const int num_ops = s.index.size();
  const int m = inst.num_machines;
  const int v = inst.num_vehicles;

  HeteroGraphFeatures f;
  f.scale = static_cast<double>(inst.time_scale());
  const double inv = 1.0 / f.scale;
  f.mask_om = op_machine_mask(s);
  f.mask_ov = op_vehicle_mask(s);

  f.op_feats = Tensor2::Zero(num_ops, kOpFeatures);
  f.edge_om = Tensor2::Zero(num_ops, m);
  f.edge_ov = Tensor2::Zero(num_ops, v);
  std::vector<double> job_completion(inst.num_jobs);
  std::vector<int> job_finished(inst.num_jobs);
  for (int i = 0; i < inst.num_jobs; ++i) {
    job_completion[i] = estimated_job_completion(s, i);
    job_finished[i] = last_finished(s, i) + 1;
  }
  for (int o = 0; o < num_ops; ++o) {
    const int i = s.index.job_of(o);
    const int j = s.index.op_of(o);
    const auto& rec = s.ops[o];
    const auto& op = inst.jobs[i][j];
    const double processing = rec.scheduled
                                  ? static_cast<double>(op.processing_time_on(rec.machine))
                                  : op.mean_processing_time();
    f.op_feats(o, 0) = rec.scheduled ? 1.0 : 0.0;
    f.op_feats(o, 1) = static_cast<double>(f.mask_om.row(o).count());
    f.op_feats(o, 2) = static_cast<double>(f.mask_ov.row(o).count());
    f.op_feats(o, 3) = processing * inv;
    f.op_feats(o, 4) = static_cast<double>(static_cast<int>(inst.jobs[i].size()) - job_finished[i]);
    f.op_feats(o, 5) = job_completion[i] * inv;
    f.op_feats(o, 6) = estimated_start(s, i, j) * inv;

    for (const auto& opt : op.options) f.edge_om(o, opt.machine) = opt.processing_time * inv;
    const Location product = product_location_for(s, i, j);
    for (int u = 0; u < v; ++u) {
      const Location from = rec.scheduled && rec.vehicle == u ? rec.vehicle_origin
                                                              : s.vehicle_location[u];
      f.edge_ov(o, u) = static_cast<double>(inst.travel_time(from, product)) * inv;
    }
  }

  f.mach_feats = Tensor2::Zero(m, kMachineFeatures);
  for (int k = 0; k < m; ++k) {
    f.mach_feats(k, 0) = s.machine_free[k] > s.clock ? 1.0 : 0.0;
    f.mach_feats(k, 1) = static_cast<double>(f.mask_om.col(k).count());
    f.mach_feats(k, 2) = static_cast<double>(s.machine_free[k]) * inv;
    f.mach_feats(k, 3) = s.machine_utilization(k);
  }

  f.veh_feats = Tensor2::Zero(v, kVehicleFeatures);
  for (int u = 0; u < v; ++u) {
    f.veh_feats(u, 0) = s.vehicle_free[u] > s.clock ? 1.0 : 0.0;
    f.veh_feats(u, 1) = static_cast<double>(f.mask_ov.col(u).count());
    f.veh_feats(u, 2) = static_cast<double>(s.vehicle_free[u]) * inv;
    f.veh_feats(u, 3) = static_cast<double>(s.vehicle_location[u]) / static_cast<double>(m);
  }

  f.edge_mm = Tensor2::Zero(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      f.edge_mm(a, b) =
          static_cast<double>(inst.travel_time(machine_location(a), machine_location(b))) * inv;
  return f;
}

namespace {

json matrix_json(const Tensor2& t) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < t.rows(); ++r)
    rows.push_back(std::vector<double>(t.row(r).data(), t.row(r).data() + t.cols()));
  return rows;
}

json mask_json(const Mask& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<int> row;
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c) ? 1 : 0);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

json features_to_json(const HeteroGraphFeatures& f) {
  return json{{"scale", f.scale},
              {"op_feats", matrix_json(f.op_feats)},
              {"mach_feats", matrix_json(f.mach_feats)},
              {"veh_feats", matrix_json(f.veh_feats)},
              {"edge_om", matrix_json(f.edge_om)},
              {"mask_om", mask_json(f.mask_om)},
              {"edge_ov", matrix_json(f.edge_ov)},
              {"mask_ov", mask_json(f.mask_ov)},
              {"edge_mm", matrix_json(f.edge_mm)}};
}

}  // namespace hgs
