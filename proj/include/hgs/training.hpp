#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgs/decoder.hpp"
#include "hgs/model.hpp"
#include "hgs/parameters.hpp"

namespace hgs {

struct TrainConfig {
  ModelConfig model;
  int num_jobs = 5;
  int num_machines = 3;
  int num_vehicles = 3;
  int epochs = 1;
  int episodes_per_epoch = 100;  // gradient steps per epoch
  int batch_size = 50;
  int refresh = 20;              // regenerate the batch every `refresh` epochs
  AdamConfig adam;
  double clip_norm = 1.0;        // <= 0 disables clipping
  std::uint64_t seed = 0;
  int validation_count = 10;
  int validation_period = 100;   // in episodes
  std::string checkpoint;        // written at the end when non-empty
  std::string log;               // CSV log path when non-empty
  std::string resume;            // checkpoint to continue from when non-empty
  double time_budget_s = 0.0;    // stop early after this wallclock; 0 = none

  int total_episodes() const { return epochs * episodes_per_epoch; }
  void validate() const;  // throws ConfigError
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
// Unknown keys are rejected; errors name the field path. A missing "seed"
// keeps `default_seed`.
TrainConfig train_config_from_json(const nlohmann::json& j, std::uint64_t default_seed = 0);
TrainConfig load_train_config(const std::filesystem::path& path, std::uint64_t default_seed = 0);

struct TrainLogRow {
  int episode = 0;
  double mean_greedy_makespan = 0.0;   // on the validation instances
  double mean_sampled_makespan = 0.0;  // one sampled rollout per validation instance
  double grad_norm = 0.0;              // last step, before clipping
  double wallclock_s = 0.0;
};

struct TrainResult {
  ParameterStore params;
  std::vector<TrainLogRow> log;
  int episodes_done = 0;
};

using TrainProgress = std::function<void(const TrainLogRow&)>;

TrainResult train(const TrainConfig& cfg, const TrainProgress& progress = nullptr);

// One REINFORCE update from the current parameters on a batch: returns the
// gradient norm before clipping. With `advantages` set, it replaces the
// per-instance G(sample) - G(greedy).
struct BatchStats {
  double grad_norm = 0.0;
  double mean_sampled_makespan = 0.0;
  double mean_greedy_makespan = 0.0;
  std::vector<double> advantages;
};
BatchStats reinforce_gradient(ParameterStore& params, const ModelConfig& model,
                              const std::vector<Instance>& batch, std::mt19937_64& rng,
                              const std::vector<double>* advantages = nullptr);

struct ValidationStats {
  std::vector<Time> makespans;
  double mean = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
};
ValidationStats validate(ParameterStore& params, const ModelConfig& model,
                         const std::vector<Instance>& instances);

// Relative gap in percent: (c / best - 1) * 100. best must be positive.
double gap(double c, double best);

std::vector<Instance> validation_instances(const TrainConfig& cfg);

void write_train_log(const std::vector<TrainLogRow>& rows, const std::filesystem::path& path);

// Checkpoint metadata carries the model config so inference needs no flags.
void save_model(const ParameterStore& params, const ModelConfig& model,
                const std::filesystem::path& path, nlohmann::json extra = nlohmann::json::object());
struct LoadedModel {
  ParameterStore params;
  ModelConfig model;
  nlohmann::json metadata;
};
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace hgs
