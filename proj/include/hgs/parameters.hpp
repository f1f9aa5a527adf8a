#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hgs/tensor.hpp"

namespace hgs {

enum class Init { kUniform, kOnes, kZeros };

struct ParameterShape {
  std::string name;
  int rows = 0;
  int cols = 0;
  int fan_in = 1;  // uniform initialization bound is 1/sqrt(fan_in)
  Init init = Init::kUniform;
};

struct Parameter {
  std::string name;
  int fan_in = 1;
  Tensor2 value;
  Tensor2 grad;
  Tensor2 adam_m;
  Tensor2 adam_v;
};

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Named trainable matrices with gradient buffers, Adam moments and a step
// counter. Also addressable as one flat vector (parameter order, row-major).
class ParameterStore {
 public:
  int add(const ParameterShape& shape);
  int index_of(const std::string& name) const;  // throws std::out_of_range
  bool contains(const std::string& name) const { return by_name_.count(name) != 0; }

  int count() const { return static_cast<int>(params_.size()); }
  Parameter& at(int i) { return params_[i]; }
  const Parameter& at(int i) const { return params_[i]; }
  Parameter& at(const std::string& name) { return params_[index_of(name)]; }
  const Parameter& at(const std::string& name) const { return params_[index_of(name)]; }

  std::size_t flat_size() const;
  double get(std::size_t flat) const;
  void set(std::size_t flat, double value);
  double grad(std::size_t flat) const;
  // Name and in-matrix position of a flat index, for diagnostics.
  std::string describe(std::size_t flat) const;

  void zero_grad();
  double grad_norm() const;
  void scale_grad(double factor);
  // First parameter with a non-finite gradient, or empty.
  std::string first_nonfinite_grad() const;

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

  friend bool operator==(const ParameterStore& a, const ParameterStore& b);

 private:
  std::pair<int, std::size_t> locate(std::size_t flat) const;

  std::vector<Parameter> params_;
  std::unordered_map<std::string, int> by_name_;
  std::int64_t step_ = 0;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization unless the shape asks
// for constants; deterministic in seed.
ParameterStore init_parameters(const std::vector<ParameterShape>& table, std::uint64_t seed);

// One Adam update from the store's gradient buffers; increments the step
// counter. Moments persist in the store.
void adam_step(ParameterStore& store, const AdamConfig& cfg);

// Checkpoint file (JSON):
//   { "format": "hgs-checkpoint", "version": 1, "step": <int>,
//     "metadata": <object>,
//     "parameters": [ { "name", "rows", "cols", "fan_in",
//                       "value": [...], "adam_m": [...], "adam_v": [...] } ] }
// Arrays are row-major. Doubles round-trip exactly.
void save_checkpoint(const ParameterStore& store, const nlohmann::json& metadata,
                     const std::filesystem::path& path);
ParameterStore load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);

}  // namespace hgs
