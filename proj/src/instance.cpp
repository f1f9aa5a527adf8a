#include "hgs/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hgs/errors.hpp"

namespace hgs {

using nlohmann::json;

Time Operation::processing_time_on(int machine) const {
  for (const auto& opt : options) {
    if (opt.machine == machine) return opt.processing_time;
  }
  return -1;
}

double Operation::mean_processing_time() const {
  Time sum = 0;
  for (const auto& opt : options) sum += opt.processing_time;
  return static_cast<double>(sum) / static_cast<double>(options.size());
}

Time Operation::min_processing_time() const {
  Time best = options.front().processing_time;
  for (const auto& opt : options) best = std::min(best, opt.processing_time);
  return best;
}

Time Operation::max_processing_time() const {
  Time best = options.front().processing_time;
  for (const auto& opt : options) best = std::max(best, opt.processing_time);
  return best;
}

int Instance::num_operations() const {
  int total = 0;
  for (const auto& job : jobs) total += static_cast<int>(job.size());
  return total;
}

Time Instance::time_scale() const {
  Time scale = 1;
  for (const auto& job : jobs)
    for (const auto& op : job) scale = std::max(scale, op.max_processing_time());
  for (const auto& row : travel)
    for (Time t : row) scale = std::max(scale, t);
  return scale;
}

OperationIndex::OperationIndex(const Instance& inst) {
  offsets_.reserve(inst.jobs.size());
  for (int i = 0; i < static_cast<int>(inst.jobs.size()); ++i) {
    offsets_.push_back(static_cast<int>(job_of_.size()));
    job_of_.insert(job_of_.end(), inst.jobs[i].size(), i);
  }
}

void validate(const Instance& inst) {
  auto fail = [](const std::string& msg) { throw InstanceError("invariant violated: " + msg); };
  if (inst.num_jobs < 1) fail("n must be >= 1");
  if (inst.num_machines < 1) fail("m must be >= 1");
  if (inst.num_vehicles < 1) fail("v must be >= 1");
  if (static_cast<int>(inst.jobs.size()) != inst.num_jobs)
    fail("jobs array length " + std::to_string(inst.jobs.size()) + " != n " +
         std::to_string(inst.num_jobs));
  for (std::size_t i = 0; i < inst.jobs.size(); ++i) {
    if (inst.jobs[i].empty()) fail("job " + std::to_string(i + 1) + " has no operations");
    for (std::size_t j = 0; j < inst.jobs[i].size(); ++j) {
      const auto where = "operation (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
      const auto& opts = inst.jobs[i][j].options;
      if (opts.empty()) fail(where + " has an empty compatible-machine set");
      for (std::size_t q = 0; q < opts.size(); ++q) {
        if (opts[q].machine < 0 || opts[q].machine >= inst.num_machines)
          fail(where + " references machine " + std::to_string(opts[q].machine + 1) +
               " outside 1.." + std::to_string(inst.num_machines));
        if (opts[q].processing_time <= 0) fail(where + " has a non-positive processing time");
        if (q > 0 && opts[q].machine <= opts[q - 1].machine)
          fail(where + " lists machines out of order or twice");
      }
    }
  }
  const auto size = static_cast<std::size_t>(inst.num_machines) + 1;
  if (inst.travel.size() != size) fail("travel matrix must have m+1 rows");
  for (std::size_t a = 0; a < size; ++a) {
    if (inst.travel[a].size() != size) fail("travel matrix must have m+1 columns");
  }
  for (std::size_t a = 0; a < size; ++a) {
    if (inst.travel[a][a] != 0) fail("travel diagonal must be zero");
    for (std::size_t b = 0; b < size; ++b) {
      if (inst.travel[a][b] < 0) fail("travel times must be nonnegative");
      if (inst.travel[a][b] != inst.travel[b][a]) fail("travel matrix must be symmetric");
    }
  }
}

namespace {

int uniform_int(std::mt19937_64& rng, long lo, long hi) {
  return static_cast<int>(std::uniform_int_distribution<long>(lo, hi)(rng));
}

// Integer realization of U(0.8 x, 1.2 x), clamped to >= 1.
int jitter(std::mt19937_64& rng, double mean) {
  const long lo = std::max(1L, std::lround(0.8 * mean));
  const long hi = std::max(lo, std::lround(1.2 * mean));
  return uniform_int(rng, lo, hi);
}

}  // namespace

GeneratedInstance generate_instance_detailed(int num_jobs, int num_machines, int num_vehicles,
                                             std::uint64_t seed) {
  if (num_jobs < 1 || num_machines < 1 || num_vehicles < 1)
    throw InstanceError("generate_instance: n, m and v must all be >= 1");

  std::mt19937_64 rng(seed);
  GeneratedInstance out;
  Instance& inst = out.instance;
  inst.name = std::to_string(num_jobs) + "x" + std::to_string(num_machines) + "x" +
              std::to_string(num_vehicles) + "_s" + std::to_string(seed);
  inst.num_jobs = num_jobs;
  inst.num_machines = num_machines;
  inst.num_vehicles = num_vehicles;

  const double m = num_machines;
  std::vector<int> machines(num_machines);
  for (int i = 0; i < num_jobs; ++i) {
    const int ops = jitter(rng, m);
    Job job;
    std::vector<int> means;
    for (int j = 0; j < ops; ++j) {
      const int count = uniform_int(rng, 1, num_machines);
      std::iota(machines.begin(), machines.end(), 0);
      std::shuffle(machines.begin(), machines.end(), rng);
      std::vector<int> chosen(machines.begin(), machines.begin() + count);
      std::sort(chosen.begin(), chosen.end());

      const int mean = uniform_int(rng, 1, 30);
      means.push_back(mean);
      Operation op;
      for (int k : chosen) op.options.push_back({k, jitter(rng, mean)});
      job.push_back(std::move(op));
    }
    inst.jobs.push_back(std::move(job));
    out.processing_means.push_back(std::move(means));
  }

  const int size = num_machines + 1;
  inst.travel.assign(size, std::vector<Time>(size, 0));
  for (int a = 0; a < size; ++a) {
    for (int b = a + 1; b < size; ++b) {
      const int mean = uniform_int(rng, 1, 20);
      out.travel_means.push_back(mean);
      inst.travel[a][b] = inst.travel[b][a] = jitter(rng, mean);
    }
  }
  return out;
}

Instance generate_instance(int num_jobs, int num_machines, int num_vehicles, std::uint64_t seed) {
  return generate_instance_detailed(num_jobs, num_machines, num_vehicles, seed).instance;
}

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw InstanceError("instance field " + path + ": " + what);
}

long long expect_int(const json& node, const std::string& path) {
  if (!node.is_number_integer()) field_error(path, "expected an integer");
  return node.get<long long>();
}

const json& expect_array(const json& node, const std::string& path) {
  if (!node.is_array()) field_error(path, "expected an array");
  return node;
}

std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

}  // namespace

Instance parse_instance(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InstanceError(std::string("instance parse error: ") + e.what());
  }
  if (!doc.is_object()) field_error("$", "expected a JSON object");
  static const char* const kKeys[] = {"name", "n", "m", "v", "jobs", "travel"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (std::find(std::begin(kKeys), std::end(kKeys), it.key()) == std::end(kKeys))
      field_error(it.key(), "unknown key");
  }
  for (const char* key : kKeys) {
    if (!doc.contains(key)) field_error(key, "missing");
  }

  Instance inst;
  if (!doc["name"].is_string()) field_error("name", "expected a string");
  inst.name = doc["name"].get<std::string>();
  inst.num_jobs = static_cast<int>(expect_int(doc["n"], "n"));
  inst.num_machines = static_cast<int>(expect_int(doc["m"], "m"));
  inst.num_vehicles = static_cast<int>(expect_int(doc["v"], "v"));

  const auto& jobs = expect_array(doc["jobs"], "jobs");
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto job_path = at("jobs", i);
    Job job;
    for (std::size_t j = 0; j < expect_array(jobs[i], job_path).size(); ++j) {
      const auto op_path = at(job_path, j);
      Operation op;
      for (std::size_t q = 0; q < expect_array(jobs[i][j], op_path).size(); ++q) {
        const auto pair_path = at(op_path, q);
        const auto& pair = expect_array(jobs[i][j][q], pair_path);
        if (pair.size() != 2) field_error(pair_path, "expected [machine_index, processing_time]");
        const auto machine = expect_int(pair[0], at(pair_path, 0));
        const auto time = expect_int(pair[1], at(pair_path, 1));
        op.options.push_back({static_cast<int>(machine - 1), time});
      }
      std::sort(op.options.begin(), op.options.end(),
                [](const auto& a, const auto& b) { return a.machine < b.machine; });
      job.push_back(std::move(op));
    }
    inst.jobs.push_back(std::move(job));
  }

  const auto& travel = expect_array(doc["travel"], "travel");
  for (std::size_t a = 0; a < travel.size(); ++a) {
    const auto row_path = at("travel", a);
    std::vector<Time> row;
    for (std::size_t b = 0; b < expect_array(travel[a], row_path).size(); ++b)
      row.push_back(expect_int(travel[a][b], at(row_path, b)));
    inst.travel.push_back(std::move(row));
  }

  validate(inst);
  return inst;
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InstanceError("cannot open instance file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_instance(buf.str());
  } catch (const InstanceError& e) {
    throw InstanceError(path.string() + ": " + e.what());
  }
}

std::string serialize_instance(const Instance& inst) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"name\": " << json(inst.name).dump() << ",\n";
  out << "  \"n\": " << inst.num_jobs << ",\n";
  out << "  \"m\": " << inst.num_machines << ",\n";
  out << "  \"v\": " << inst.num_vehicles << ",\n";
  out << "  \"jobs\": [\n";
  for (std::size_t i = 0; i < inst.jobs.size(); ++i) {
    json job = json::array();
    for (const auto& op : inst.jobs[i]) {
      json pairs = json::array();
      for (const auto& opt : op.options) pairs.push_back({opt.machine + 1, opt.processing_time});
      job.push_back(std::move(pairs));
    }
    out << "    " << job.dump() << (i + 1 < inst.jobs.size() ? ",\n" : "\n");
  }
  out << "  ],\n";
  out << "  \"travel\": [\n";
  for (std::size_t a = 0; a < inst.travel.size(); ++a)
    out << "    " << json(inst.travel[a]).dump() << (a + 1 < inst.travel.size() ? ",\n" : "\n");
  out << "  ]\n}\n";
  return out.str();
}

void write_instance(const Instance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file " + path.string());
  out << serialize_instance(inst);
  if (!out) throw std::runtime_error("I/O error writing " + path.string());
}

}  // namespace hgs
