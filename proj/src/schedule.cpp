#include "hgs/schedule.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "hgs/errors.hpp"

namespace hgs {

Schedule final_schedule(const ScheduleState& state) {
  if (!state.terminal()) throw ContractError("final_schedule requires a terminal state");
  const Instance& inst = state.instance();
  Schedule out;
  out.vehicles.resize(inst.num_vehicles);
  for (int f = 0; f < state.index.size(); ++f) {
    const auto& rec = state.ops[f];
    const int job = state.index.job_of(f);
    const int op = state.index.op_of(f);
    out.operations.push_back({job, op, rec.machine, rec.vehicle, rec.off_load_start, rec.arrival,
                              rec.start, rec.completion});
    out.vehicles[rec.vehicle].push_back({job, op, rec.vehicle_origin, rec.pickup_location,
                                         machine_location(rec.machine), rec.off_load_start,
                                         rec.arrival});
    out.makespan = std::max(out.makespan, rec.completion);
  }
  for (auto& tasks : out.vehicles) {
    std::stable_sort(tasks.begin(), tasks.end(),
                     [](const auto& a, const auto& b) {
                       // A zero-length transport can precede another departure
                       // at the same instant.
                       return std::tie(a.depart, a.arrival) < std::tie(b.depart, b.arrival);
                     });
  }
  return out;
}

std::vector<std::string> check_schedule(const Instance& inst, const Schedule& schedule) {
  std::vector<std::string> errors;
  auto name = [](int job, int op) {
    return "O" + std::to_string(job + 1) + "," + std::to_string(op + 1);
  };

  std::map<std::pair<int, int>, const ScheduledOperation*> by_op;
  for (const auto& row : schedule.operations) {
    if (row.job < 0 || row.job >= inst.num_jobs || row.op < 0 ||
        row.op >= static_cast<int>(inst.jobs[row.job].size())) {
      errors.push_back("row references a nonexistent operation");
      continue;
    }
    if (!by_op.emplace(std::pair{row.job, row.op}, &row).second)
      errors.push_back(name(row.job, row.op) + " scheduled twice");
  }
  if (static_cast<int>(by_op.size()) != inst.num_operations())
    errors.push_back("schedule covers " + std::to_string(by_op.size()) + " of " +
                     std::to_string(inst.num_operations()) + " operations");
  if (!errors.empty()) return errors;

  Time makespan = 0;
  for (const auto& [key, row] : by_op) {
    const auto [job, op] = key;
    const auto who = name(job, op);
    makespan = std::max(makespan, row->completion);
    if (row->machine < 0 || row->machine >= inst.num_machines ||
        !inst.jobs[job][op].compatible(row->machine)) {
      errors.push_back(who + " on an incompatible machine");
      continue;
    }
    if (row->vehicle < 0 || row->vehicle >= inst.num_vehicles) {
      errors.push_back(who + " uses a nonexistent vehicle");
      continue;
    }
    if (row->completion - row->start != inst.jobs[job][op].processing_time_on(row->machine))
      errors.push_back(who + " has the wrong processing duration");
    if (row->start < row->arrival) errors.push_back(who + " starts before its delivery");
    if (op > 0) {
      const auto* pred = by_op.at({job, op - 1});
      if (row->off_load_start < pred->completion)
        errors.push_back(who + " transported before its predecessor completed");
      if (row->start < pred->completion)
        errors.push_back(who + " starts before its predecessor completes");
    }
  }
  if (makespan != schedule.makespan) errors.push_back("reported makespan differs from max completion");

  // Machine exclusivity over processing intervals.
  std::vector<std::vector<const ScheduledOperation*>> per_machine(inst.num_machines);
  for (const auto& [key, row] : by_op) per_machine[row->machine].push_back(row);
  for (int k = 0; k < inst.num_machines; ++k) {
    auto& rows = per_machine[k];
    std::sort(rows.begin(), rows.end(), [](auto a, auto b) { return a->start < b->start; });
    for (std::size_t q = 1; q < rows.size(); ++q) {
      if (rows[q]->start < rows[q - 1]->completion)
        errors.push_back("machine " + std::to_string(k + 1) + " overlaps " +
                         name(rows[q - 1]->job, rows[q - 1]->op) + " and " +
                         name(rows[q]->job, rows[q]->op));
    }
  }

  // Vehicle routes: exclusivity and travel-time consistency.
  std::vector<std::vector<const ScheduledOperation*>> per_vehicle(inst.num_vehicles);
  for (const auto& [key, row] : by_op) per_vehicle[row->vehicle].push_back(row);
  for (int u = 0; u < inst.num_vehicles; ++u) {
    auto& rows = per_vehicle[u];
    std::stable_sort(rows.begin(), rows.end(),
                     [](auto a, auto b) {
                       return std::tie(a->off_load_start, a->arrival) <
                              std::tie(b->off_load_start, b->arrival);
                     });
    Location position = kDepot;
    Time free_at = 0;
    for (const auto* row : rows) {
      const auto who = name(row->job, row->op);
      if (row->off_load_start < free_at)
        errors.push_back("vehicle " + std::to_string(u + 1) + " double-booked at " + who);
      const Location pickup =
          row->op == 0 ? kDepot : machine_location(by_op.at({row->job, row->op - 1})->machine);
      const Location dest = machine_location(row->machine);
      const Time expected = row->off_load_start + inst.travel_time(position, pickup) +
                            inst.travel_time(pickup, dest);
      if (row->arrival != expected)
        errors.push_back(who + " arrival " + std::to_string(row->arrival) + " != route time " +
                         std::to_string(expected));
      position = dest;
      free_at = row->arrival;
    }
  }
  return errors;
}

std::string schedule_csv(const Schedule& schedule) {
  std::ostringstream out;
  out << "job,op,machine,vehicle,off_load_start,arrival,start,completion\n";
  for (const auto& r : schedule.operations) {
    out << r.job + 1 << ',' << r.op + 1 << ',' << r.machine + 1 << ',' << r.vehicle + 1 << ','
        << r.off_load_start << ',' << r.arrival << ',' << r.start << ',' << r.completion << '\n';
  }
  return out.str();
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("I/O error writing " + path.string());
}

const char* job_color(int job) {
  static const char* const kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                         "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  return kPalette[job % 10];
}

}  // namespace

void write_schedule_csv(const Schedule& schedule, const std::filesystem::path& path) {
  write_text(path, schedule_csv(schedule));
}

std::string schedule_svg(const Instance& inst, const Schedule& schedule) {
  constexpr int kLane = 28;
  constexpr int kLabel = 60;
  constexpr int kWidth = 900;
  const int lanes = inst.num_machines + inst.num_vehicles;
  const double px = schedule.makespan > 0 ? static_cast<double>(kWidth) / schedule.makespan : 1.0;
  const int height = lanes * kLane + 30;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLabel + kWidth + 10
      << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  for (int k = 0; k < inst.num_machines; ++k)
    svg << "  <text x=\"4\" y=\"" << k * kLane + 18 << "\">M" << k + 1 << "</text>\n";
  for (int u = 0; u < inst.num_vehicles; ++u)
    svg << "  <text x=\"4\" y=\"" << (inst.num_machines + u) * kLane + 18 << "\">V" << u + 1
        << "</text>\n";

  auto bar = [&](int lane, Time from, Time to, int job, const std::string& label) {
    const double x = kLabel + from * px;
    const double w = std::max(1.0, (to - from) * px);
    svg << "  <rect x=\"" << x << "\" y=\"" << lane * kLane + 4 << "\" width=\"" << w
        << "\" height=\"" << kLane - 8 << "\" fill=\"" << job_color(job)
        << "\" stroke=\"black\" stroke-width=\"0.5\"><title>" << label << " [" << from << ", "
        << to << ")</title></rect>\n";
  };
  for (const auto& r : schedule.operations) {
    const auto label = "O" + std::to_string(r.job + 1) + "," + std::to_string(r.op + 1);
    bar(r.machine, r.start, r.completion, r.job, label);
    bar(inst.num_machines + r.vehicle, r.off_load_start, r.arrival, r.job, label);
  }
  svg << "  <text x=\"" << kLabel << "\" y=\"" << height - 8 << "\">makespan " << schedule.makespan
      << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void write_schedule_svg(const Instance& inst, const Schedule& schedule,
                        const std::filesystem::path& path) {
  write_text(path, schedule_svg(inst, schedule));
}

}  // namespace hgs
