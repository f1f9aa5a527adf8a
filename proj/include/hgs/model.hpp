#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgs/parameters.hpp"

namespace hgs {

// Architecture hyperparameters. The defaults are the reference configuration.
struct ModelConfig {
  int d_h = 128;     // node embedding width
  int heads = 8;     // Z
  int d_z = 16;      // hidden width of the augmented-compatibility map
  int d_ff = 512;    // feed-forward hidden width
  int layers = 2;    // L: L-1 sub-encoder layers plus one global layer
  double clip = 10.0;

  int d_k() const { return d_h / heads; }
  void validate() const;  // throws ConfigError

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json model_config_to_json(const ModelConfig& cfg);
// Unknown keys are rejected; `where` prefixes error messages.
ModelConfig model_config_from_json(const nlohmann::json& j, const std::string& where = "model");

// Every trainable matrix of encoder and decoder, in a fixed order.
std::vector<ParameterShape> model_parameter_table(const ModelConfig& cfg);
ParameterStore init_model(const ModelConfig& cfg, std::uint64_t seed);
// Throws ConfigError if the store does not hold exactly the table's shapes.
void check_model_parameters(const ParameterStore& store, const ModelConfig& cfg);

}  // namespace hgs
