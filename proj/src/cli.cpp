#include "hgs/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "hgs/baselines.hpp"
#include "hgs/errors.hpp"
#include "hgs/seeds.hpp"
#include "hgs/training.hpp"

#ifndef HGS_VERSION
#define HGS_VERSION "dev"
#endif

namespace hgs {

using nlohmann::json;
namespace fs = std::filesystem;

json manifest_to_json(const RunManifest& m) {
  return json{{"command", m.command},       {"config", m.config},
              {"seed", m.seed},             {"code_version", m.code_version},
              {"wallclock_s", m.wallclock_s}, {"outputs", m.outputs}};
}

void write_manifest(const RunManifest& m, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << manifest_to_json(m).dump(2) << '\n';
  if (!out) throw std::runtime_error("I/O error writing manifest " + path.string());
}

std::uint64_t default_seed() {
  const char* env = std::getenv("HGS_SEED");
  if (!env || !*env) return 0;
  const std::string text(env);
  if (text.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("HGS_SEED: expected a non-negative integer, got '" + text + "'");
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw ConfigError("HGS_SEED: out of range: '" + text + "'");
  }
}

std::vector<ResultRow> finalize_results(std::vector<ResultRow> rows) {
  std::map<std::string, double> best;
  for (const auto& r : rows) {
    auto it = best.find(r.instance);
    if (it == best.end() || r.makespan < it->second) best[r.instance] = r.makespan;
  }
  for (auto& r : rows) r.gap_pct = gap(r.makespan, best[r.instance]);

  std::vector<std::string> sizes;
  std::vector<std::string> methods;
  for (const auto& r : rows) {
    if (std::find(sizes.begin(), sizes.end(), r.size) == sizes.end()) sizes.push_back(r.size);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
      methods.push_back(r.method);
  }
  std::vector<ResultRow> means;
  for (const auto& size : sizes) {
    for (const auto& method : methods) {
      ResultRow mean;
      mean.instance = "mean:" + size;
      mean.size = size;
      mean.method = method;
      int count = 0;
      for (const auto& r : rows) {
        if (r.size != size || r.method != method) continue;
        mean.makespan += r.makespan;
        mean.runtime_s += r.runtime_s;
        mean.gap_pct += r.gap_pct;
        ++count;
      }
      if (count == 0) continue;
      mean.makespan /= count;
      mean.runtime_s /= count;
      mean.gap_pct /= count;
      means.push_back(mean);
    }
  }
  rows.insert(rows.end(), means.begin(), means.end());
  return rows;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out = "instance,method,makespan,runtime_s,gap_pct\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.4f,%.6f,%.4f\n", r.makespan, r.runtime_s, r.gap_pct);
    out += r.instance + "," + r.method + buf;
  }
  return out;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string size_key(const Instance& inst) {
  return std::to_string(inst.num_jobs) + "x" + std::to_string(inst.num_machines) + "x" +
         std::to_string(inst.num_vehicles);
}

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

fs::path sibling_manifest(const fs::path& out) {
  fs::path p = out;
  p += ".manifest.json";
  return p;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) items.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) items.push_back(cur);
  return items;
}

struct GaFlags {
  int population = 40;
  int generations = 200;
  double time_budget_s = 0.0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--ga-population", population, "GA population size");
    cmd->add_option("--ga-generations", generations, "GA generations");
    cmd->add_option("--ga-time", time_budget_s, "GA wallclock budget in seconds (0 = none)");
  }
  GAConfig config(std::uint64_t seed) const {
    GAConfig c;
    c.population = population;
    c.generations = generations;
    c.time_budget_s = time_budget_s;
    c.seed = seed;
    return c;
  }
  json to_json() const {
    return json{{"population", population}, {"generations", generations}, {"time_budget_s", time_budget_s}};
  }
};

const std::vector<std::string> kMethods{"hgs", "spt", "lpt", "fifo", "ga", "opt"};

SolveResult solve_with(const std::string& method, const Instance& inst, const LoadedModel* model,
                       const GaFlags& ga, std::uint64_t ga_seed) {
  if (method == "spt" || method == "lpt" || method == "fifo") return run_rule(inst, parse_rule(method));
  if (method == "ga") return ga_solve(inst, ga.config(ga_seed)).best;
  if (method == "opt") return exhaustive_optimal(inst).best;
  if (method == "hgs") {
    if (!model) throw ConfigError("method hgs needs --checkpoint");
    ParameterStore params = model->params;
    const Trajectory t = rollout(inst, params, model->model, RolloutOptions{});
    SolveResult r;
    r.actions = t.actions;
    r.schedule = t.schedule;
    r.makespan = t.makespan;
    return r;
  }
  throw ConfigError("unknown method '" + method + "' (expected one of hgs, spt, lpt, fifo, ga, opt)");
}

std::vector<fs::path> instance_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("--instances: not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto& p = entry.path();
    if (!entry.is_regular_file() || p.extension() != ".json") continue;
    if (p.filename().string().find("manifest") != std::string::npos) continue;
    files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("--instances: no .json instance files in " + dir.string());
  return files;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heterogeneous-graph scheduler for flexible job shops with transport"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed_flag;

  // generate
  auto* gen = app.add_subcommand("generate", "Write random instances");
  int gen_n = 5, gen_m = 3, gen_v = 3, gen_count = 1;
  std::string gen_dir = ".";
  gen->add_option("--n", gen_n, "jobs")->required()->check(CLI::PositiveNumber);
  gen->add_option("--m", gen_m, "machines")->required()->check(CLI::PositiveNumber);
  gen->add_option("--v", gen_v, "vehicles")->required()->check(CLI::PositiveNumber);
  gen->add_option("--count", gen_count, "number of instances")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed_flag, "seed of the first instance; instance i uses seed + i");
  gen->add_option("--out-dir", gen_dir, "output directory");

  // train
  auto* tr = app.add_subcommand("train", "Train a policy");
  std::string tr_config, tr_dir = ".", tr_resume;
  tr->add_option("--config", tr_config, "JSON training config")->required();
  tr->add_option("--out-dir", tr_dir, "directory for checkpoint, log and manifest");
  tr->add_option("--resume", tr_resume, "checkpoint to continue from");
  tr->add_option("--seed", seed_flag, "seed when the config has none");

  // eval
  auto* ev = app.add_subcommand("eval", "Benchmark methods on a directory of instances");
  std::string ev_ckpt, ev_dir, ev_methods = "spt,lpt,fifo", ev_out = "results.csv";
  GaFlags ev_ga;
  ev->add_option("--checkpoint", ev_ckpt, "trained checkpoint (needed for hgs)");
  ev->add_option("--instances", ev_dir, "instance directory")->required();
  ev->add_option("--methods", ev_methods, "comma list of hgs,spt,lpt,fifo,ga,opt");
  ev->add_option("--out", ev_out, "results CSV");
  ev->add_option("--seed", seed_flag, "seed for GA streams");
  ev_ga.add_to(ev);

  // solve
  auto* so = app.add_subcommand("solve", "Solve one instance and export the schedule");
  std::string so_inst, so_method = "spt", so_out, so_ckpt;
  GaFlags so_ga;
  so->add_option("--instance", so_inst, "instance file")->required();
  so->add_option("--method", so_method, "hgs, spt, lpt, fifo, ga or opt");
  so->add_option("--out", so_out, "schedule .csv or Gantt .svg")->required();
  so->add_option("--checkpoint", so_ckpt, "trained checkpoint (needed for hgs)");
  so->add_option("--seed", seed_flag, "seed for the GA stream");
  so_ga.add_to(so);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const std::uint64_t seed = seed_flag ? *seed_flag : default_seed();
    RunManifest manifest;
    manifest.code_version = HGS_VERSION;
    manifest.seed = seed;

    if (gen->parsed()) {
      ensure_dir(gen_dir);
      manifest.command = "generate";
      manifest.config = json{{"n", gen_n}, {"m", gen_m}, {"v", gen_v}, {"count", gen_count},
                             {"seed", seed}, {"out_dir", gen_dir}};
      for (int i = 0; i < gen_count; ++i) {
        const Instance inst = generate_instance(gen_n, gen_m, gen_v, seed + static_cast<std::uint64_t>(i));
        const fs::path path = fs::path(gen_dir) / (inst.name + ".json");
        write_instance(inst, path);
        manifest.outputs.push_back(path.string());
      }
      out << "wrote " << gen_count << " instances to " << gen_dir << '\n';
      manifest.wallclock_s = seconds_since(t0);
      write_manifest(manifest, fs::path(gen_dir) / "manifest.json");
      return 0;
    }

    if (tr->parsed()) {
      TrainConfig cfg = load_train_config(tr_config, seed);
      if (seed_flag) cfg.seed = *seed_flag;
      if (!tr_resume.empty()) cfg.resume = tr_resume;
      ensure_dir(tr_dir);
      if (cfg.checkpoint.empty()) cfg.checkpoint = (fs::path(tr_dir) / "checkpoint.json").string();
      if (cfg.log.empty()) cfg.log = (fs::path(tr_dir) / "train_log.csv").string();
      manifest.command = "train";
      manifest.seed = cfg.seed;
      manifest.config = train_config_to_json(cfg);
      const TrainResult r = train(cfg, [&](const TrainLogRow& row) {
        out << "episode " << row.episode << " greedy " << row.mean_greedy_makespan << " sampled "
            << row.mean_sampled_makespan << " grad_norm " << row.grad_norm << " t "
            << row.wallclock_s << "s" << std::endl;
      });
      manifest.outputs = {cfg.checkpoint, cfg.log};
      manifest.config["episodes_done"] = r.episodes_done;
      manifest.wallclock_s = seconds_since(t0);
      write_manifest(manifest, fs::path(tr_dir) / "manifest.json");
      return 0;
    }

    if (ev->parsed()) {
      const auto methods = split_list(ev_methods);
      if (methods.empty()) throw ConfigError("--methods: empty list");
      for (const auto& m : methods)
        if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end())
          throw ConfigError("--methods: unknown method '" + m + "'");
      std::optional<LoadedModel> model;
      if (std::find(methods.begin(), methods.end(), "hgs") != methods.end()) {
        if (ev_ckpt.empty()) throw ConfigError("--checkpoint is required when methods include hgs");
        model = load_model(ev_ckpt);
      }
      const auto files = instance_files(ev_dir);
      std::vector<ResultRow> rows;
      for (std::size_t i = 0; i < files.size(); ++i) {
        const Instance inst = load_instance(files[i]);
        const std::string name = files[i].stem().string();
        for (const auto& method : methods) {
          const auto s0 = std::chrono::steady_clock::now();
          const SolveResult r = solve_with(method, inst, model ? &*model : nullptr, ev_ga,
                                           substream_seed(seed, "ga", i));
          rows.push_back({name, size_key(inst), method, static_cast<double>(r.makespan),
                          seconds_since(s0), 0.0});
        }
      }
      rows = finalize_results(std::move(rows));
      const fs::path out_path(ev_out);
      ensure_dir(out_path.parent_path());
      {
        std::ofstream f(out_path);
        if (!f) throw std::runtime_error("cannot write " + out_path.string());
        f << results_csv(rows);
      }
      for (const auto& r : rows)
        if (r.instance.rfind("mean:", 0) == 0)
          out << r.instance << " " << r.method << " makespan " << r.makespan << " gap "
              << r.gap_pct << "%\n";
      manifest.command = "eval";
      manifest.config = json{{"checkpoint", ev_ckpt}, {"instances", ev_dir}, {"methods", methods},
                             {"out", ev_out},         {"ga", ev_ga.to_json()}};
      manifest.outputs = {out_path.string()};
      manifest.wallclock_s = seconds_since(t0);
      write_manifest(manifest, sibling_manifest(out_path));
      return 0;
    }

    if (so->parsed()) {
      const Instance inst = load_instance(so_inst);
      std::optional<LoadedModel> model;
      if (so_method == "hgs") {
        if (so_ckpt.empty()) throw ConfigError("--checkpoint is required for method hgs");
        model = load_model(so_ckpt);
      }
      const SolveResult r =
          solve_with(so_method, inst, model ? &*model : nullptr, so_ga, substream_seed(seed, "ga"));
      const auto problems = check_schedule(inst, r.schedule);
      if (!problems.empty()) throw ContractError("schedule check failed: " + problems.front());
      const fs::path out_path(so_out);
      ensure_dir(out_path.parent_path());
      if (out_path.extension() == ".svg") {
        write_schedule_svg(inst, r.schedule, out_path);
      } else {
        write_schedule_csv(r.schedule, out_path);
      }
      out << so_method << " makespan " << r.makespan << '\n';
      manifest.command = "solve";
      manifest.config = json{{"instance", so_inst}, {"method", so_method}, {"out", so_out},
                             {"checkpoint", so_ckpt}, {"ga", so_ga.to_json()}};
      manifest.outputs = {out_path.string()};
      manifest.wallclock_s = seconds_since(t0);
      write_manifest(manifest, sibling_manifest(out_path));
      return 0;
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << '\n';
    return 1;
  }
  return 1;
}

}  // namespace hgs
