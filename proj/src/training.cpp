#include "hgs/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hgs/errors.hpp"
#include "hgs/seeds.hpp"

namespace hgs {

using nlohmann::json;

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& msg) {
    throw ConfigError(field + ": " + msg);
  };
  model.validate();
  if (num_jobs < 1) fail("jobs", "must be positive");
  if (num_machines < 1) fail("machines", "must be positive");
  if (num_vehicles < 1) fail("vehicles", "must be positive");
  if (epochs < 1) fail("epochs", "must be positive");
  if (episodes_per_epoch < 1) fail("episodes_per_epoch", "must be positive");
  if (batch_size < 1) fail("batch_size", "must be positive");
  if (refresh < 1) fail("refresh", "must be at least 1");
  if (!(adam.lr > 0.0)) fail("lr", "must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) fail("beta1", "must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) fail("beta2", "must lie in [0, 1)");
  if (!(adam.eps > 0.0)) fail("adam_eps", "must be positive");
  if (validation_count < 1) fail("validation_count", "must be positive");
  if (validation_period < 1) fail("validation_period", "must be positive");
  if (time_budget_s < 0.0) fail("time_budget_s", "must not be negative");
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"model", model_config_to_json(c.model)},
              {"jobs", c.num_jobs},
              {"machines", c.num_machines},
              {"vehicles", c.num_vehicles},
              {"epochs", c.epochs},
              {"episodes_per_epoch", c.episodes_per_epoch},
              {"batch_size", c.batch_size},
              {"refresh", c.refresh},
              {"lr", c.adam.lr},
              {"beta1", c.adam.beta1},
              {"beta2", c.adam.beta2},
              {"adam_eps", c.adam.eps},
              {"clip_norm", c.clip_norm},
              {"seed", c.seed},
              {"validation_count", c.validation_count},
              {"validation_period", c.validation_period},
              {"checkpoint", c.checkpoint},
              {"log", c.log},
              {"resume", c.resume},
              {"time_budget_s", c.time_budget_s}};
}

TrainConfig train_config_from_json(const json& j, std::uint64_t default_seed) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::set<std::string> known{
      "model",      "jobs",     "machines",  "vehicles",         "epochs",
      "episodes_per_epoch",     "batch_size", "refresh",         "lr",
      "beta1",      "beta2",    "adam_eps",  "clip_norm",        "seed",
      "validation_count",       "validation_period",             "checkpoint",
      "log",        "resume",   "time_budget_s"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError(key + ": unknown key");

  TrainConfig c;
  c.seed = default_seed;
  auto read_int = [&](const char* key, int& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) throw ConfigError(std::string(key) + ": expected an integer");
    out = j[key].get<int>();
  };
  auto read_double = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) throw ConfigError(std::string(key) + ": expected a number");
    out = j[key].get<double>();
  };
  auto read_string = [&](const char* key, std::string& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_string()) throw ConfigError(std::string(key) + ": expected a string");
    out = j[key].get<std::string>();
  };
  if (j.contains("model")) c.model = model_config_from_json(j["model"], "model");
  read_int("jobs", c.num_jobs);
  read_int("machines", c.num_machines);
  read_int("vehicles", c.num_vehicles);
  read_int("epochs", c.epochs);
  read_int("episodes_per_epoch", c.episodes_per_epoch);
  read_int("batch_size", c.batch_size);
  read_int("refresh", c.refresh);
  read_double("lr", c.adam.lr);
  read_double("beta1", c.adam.beta1);
  read_double("beta2", c.adam.beta2);
  read_double("adam_eps", c.adam.eps);
  read_double("clip_norm", c.clip_norm);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  read_int("validation_count", c.validation_count);
  read_int("validation_period", c.validation_period);
  read_string("checkpoint", c.checkpoint);
  read_string("log", c.log);
  read_string("resume", c.resume);
  read_double("time_budget_s", c.time_budget_s);
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path, std::uint64_t default_seed) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return train_config_from_json(j, default_seed);
}

double gap(double c, double best) {
  if (!(best > 0.0)) throw ContractError("gap: best makespan must be positive");
  return (c / best - 1.0) * 100.0;
}

std::vector<Instance> validation_instances(const TrainConfig& cfg) {
  std::vector<Instance> out;
  for (int i = 0; i < cfg.validation_count; ++i)
    out.push_back(generate_instance(cfg.num_jobs, cfg.num_machines, cfg.num_vehicles,
                                    substream_seed(cfg.seed, "validation", i)));
  return out;
}

ValidationStats validate(ParameterStore& params, const ModelConfig& model,
                         const std::vector<Instance>& instances) {
  ValidationStats st;
  if (instances.empty()) return st;
  double sum = 0.0;
  for (const auto& inst : instances) {
    st.makespans.push_back(greedy_makespan(inst, params, model));
    sum += static_cast<double>(st.makespans.back());
  }
  st.mean = sum / static_cast<double>(instances.size());
  std::vector<Time> sorted = st.makespans;
  std::sort(sorted.begin(), sorted.end());
  auto pct = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size()))) - 1;
    return static_cast<double>(sorted[std::min(idx, sorted.size() - 1)]);
  };
  st.p50 = pct(0.5);
  st.p90 = pct(0.9);
  return st;
}

BatchStats reinforce_gradient(ParameterStore& params, const ModelConfig& model,
                              const std::vector<Instance>& batch, std::mt19937_64& rng,
                              const std::vector<double>* advantages) {
  if (batch.empty()) throw ContractError("reinforce_gradient: empty batch");
  if (advantages && advantages->size() != batch.size())
    throw ContractError("reinforce_gradient: one advantage per instance required");
  params.zero_grad();
  BatchStats st;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Trajectory greedy = rollout(batch[b], params, model, RolloutOptions{});
    Tape tape(true);
    RolloutOptions opt;
    opt.mode = DecodeMode::kSample;
    opt.rng = &rng;
    opt.tape = &tape;
    const Trajectory sampled = rollout(batch[b], params, model, opt);
    // G(sample) - G(greedy) telescopes to the makespan difference.
    const double adv = advantages ? (*advantages)[b]
                                  : static_cast<double>(greedy.makespan - sampled.makespan);
    st.advantages.push_back(adv);
    st.mean_sampled_makespan += static_cast<double>(sampled.makespan) * inv_b;
    st.mean_greedy_makespan += static_cast<double>(greedy.makespan) * inv_b;
    if (adv != 0.0) tape.backward(scale(sampled.log_prob_sum, -adv * inv_b));
  }
  st.grad_norm = params.grad_norm();
  return st;
}

namespace {

std::vector<Instance> training_batch(const TrainConfig& cfg, int block) {
  std::vector<Instance> out;
  for (int b = 0; b < cfg.batch_size; ++b) {
    const auto index = static_cast<std::uint64_t>(block) * static_cast<std::uint64_t>(cfg.batch_size) +
                       static_cast<std::uint64_t>(b);
    out.push_back(generate_instance(cfg.num_jobs, cfg.num_machines, cfg.num_vehicles,
                                    substream_seed(cfg.seed, "train", index)));
  }
  return out;
}

double mean_sampled(ParameterStore& params, const ModelConfig& model,
                    const std::vector<Instance>& instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double sum = 0.0;
  for (const auto& inst : instances) {
    RolloutOptions opt;
    opt.mode = DecodeMode::kSample;
    opt.rng = &rng;
    sum += static_cast<double>(rollout(inst, params, model, opt).makespan);
  }
  return sum / static_cast<double>(instances.size());
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const TrainProgress& progress) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  TrainResult r;
  int first_episode = 0;
  if (!cfg.resume.empty()) {
    LoadedModel lm = load_model(cfg.resume);
    if (!(lm.model == cfg.model))
      throw ConfigError("resume: checkpoint model config differs from model");
    r.params = std::move(lm.params);
    first_episode = lm.metadata.value("episode", 0);
  } else {
    r.params = init_model(cfg.model, substream_seed(cfg.seed, "init"));
  }
  const auto val = validation_instances(cfg);

  auto record = [&](int episode, double grad_norm) {
    TrainLogRow row;
    row.episode = episode;
    row.mean_greedy_makespan = validate(r.params, cfg.model, val).mean;
    row.mean_sampled_makespan =
        mean_sampled(r.params, cfg.model, val, substream_seed(cfg.seed, "validation-sample", episode));
    row.grad_norm = grad_norm;
    row.wallclock_s = elapsed();
    r.log.push_back(row);
    if (progress) progress(row);
  };

  if (first_episode == 0) record(0, 0.0);
  std::vector<Instance> batch;
  int batch_block = -1;
  double last_norm = 0.0;
  int done = first_episode;
  for (int ep = first_episode; ep < cfg.total_episodes(); ++ep) {
    const int block = (ep / cfg.episodes_per_epoch) / cfg.refresh;
    if (block != batch_block) {
      batch = training_batch(cfg, block);
      batch_block = block;
    }
    std::mt19937_64 rng(substream_seed(cfg.seed, "sample", static_cast<std::uint64_t>(ep)));
    const BatchStats st = reinforce_gradient(r.params, cfg.model, batch, rng);
    if (const auto bad = r.params.first_nonfinite_grad(); !bad.empty())
      throw NumericError("non-finite gradient in parameter " + bad + " at episode " +
                         std::to_string(ep + 1));
    last_norm = st.grad_norm;
    if (st.grad_norm > 0.0) {
      if (cfg.clip_norm > 0.0 && st.grad_norm > cfg.clip_norm)
        r.params.scale_grad(cfg.clip_norm / st.grad_norm);
      adam_step(r.params, cfg.adam);
    }
    done = ep + 1;
    const bool out_of_time = cfg.time_budget_s > 0.0 && elapsed() >= cfg.time_budget_s;
    if (done % cfg.validation_period == 0 || done == cfg.total_episodes() || out_of_time)
      record(done, last_norm);
    if (out_of_time) break;
  }
  r.episodes_done = done;

  if (!cfg.checkpoint.empty())
    save_model(r.params, cfg.model, cfg.checkpoint,
               json{{"episode", done}, {"train", train_config_to_json(cfg)}});
  if (!cfg.log.empty()) write_train_log(r.log, cfg.log);
  return r;
}

void write_train_log(const std::vector<TrainLogRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write training log " + path.string());
  out << "episode,mean_greedy_makespan,mean_sampled_makespan,grad_norm,wallclock\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.9g,%.3f\n", r.episode, r.mean_greedy_makespan,
                  r.mean_sampled_makespan, r.grad_norm, r.wallclock_s);
    out << buf;
  }
  if (!out) throw std::runtime_error("I/O error writing training log " + path.string());
}

void save_model(const ParameterStore& params, const ModelConfig& model,
                const std::filesystem::path& path, json extra) {
  extra["model"] = model_config_to_json(model);
  save_checkpoint(params, extra, path);
}

LoadedModel load_model(const std::filesystem::path& path) {
  LoadedModel lm;
  lm.params = load_checkpoint(path, &lm.metadata);
  if (!lm.metadata.contains("model"))
    throw ConfigError("checkpoint " + path.string() + ": metadata.model missing");
  lm.model = model_config_from_json(lm.metadata["model"], "checkpoint.metadata.model");
  check_model_parameters(lm.params, lm.model);
  return lm;
}

}  // namespace hgs
