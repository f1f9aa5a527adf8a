#include "hgs/model.hpp"

#include <set>

#include "hgs/errors.hpp"
#include "hgs/hetgraph.hpp"

namespace hgs {

using nlohmann::json;

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model." + msg); };
  if (d_h < 1) fail("d_h: must be positive");
  if (heads < 1) fail("heads: must be positive");
  if (d_h % heads != 0) fail("heads: must divide d_h");
  if (d_z < 1) fail("d_z: must be positive");
  if (d_ff < 1) fail("d_ff: must be positive");
  if (layers < 1) fail("layers: must be at least 1");
  if (!(clip > 0.0)) fail("clip: must be positive");
}

json model_config_to_json(const ModelConfig& cfg) {
  return json{{"d_h", cfg.d_h},     {"heads", cfg.heads},   {"d_z", cfg.d_z},
              {"d_ff", cfg.d_ff},   {"layers", cfg.layers}, {"clip", cfg.clip}};
}

ModelConfig model_config_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  static const std::set<std::string> known{"d_h", "heads", "d_z", "d_ff", "layers", "clip"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError(where + "." + key + ": unknown key");
  ModelConfig cfg;
  auto read_int = [&](const char* key, int& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    out = j[key].get<int>();
  };
  read_int("d_h", cfg.d_h);
  read_int("heads", cfg.heads);
  read_int("d_z", cfg.d_z);
  read_int("d_ff", cfg.d_ff);
  read_int("layers", cfg.layers);
  if (j.contains("clip")) {
    if (!j["clip"].is_number()) throw ConfigError(where + ".clip: expected a number");
    cfg.clip = j["clip"].get<double>();
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    throw ConfigError(where + msg.substr(std::string("model").size()));
  }
  return cfg;
}

namespace {

void add_block(std::vector<ParameterShape>& t, const ModelConfig& c, const std::string& prefix,
               const std::vector<std::string>& classes) {
  t.push_back({prefix + "Wq", c.d_h, c.d_h, c.d_h});
  for (const auto& cls : classes) {
    t.push_back({prefix + "Wk_" + cls, c.d_h, c.d_h, c.d_h});
    t.push_back({prefix + "Wv_" + cls, c.d_h, c.d_h, c.d_h});
    t.push_back({prefix + "e1_" + cls, c.d_z, 2, 2});
    t.push_back({prefix + "e2_" + cls, 1, c.d_z, c.d_z});
    t.push_back({prefix + "e3_" + cls, 1, 1, 1});
  }
  t.push_back({prefix + "Wo", c.d_h, c.d_h, c.d_h});
  t.push_back({prefix + "an1.g", 1, c.d_h, 1, Init::kOnes});
  t.push_back({prefix + "an1.b", 1, c.d_h, 1, Init::kZeros});
  t.push_back({prefix + "ff1.W", c.d_ff, c.d_h, c.d_h});
  t.push_back({prefix + "ff1.b", 1, c.d_ff, c.d_h});
  t.push_back({prefix + "ff2.W", c.d_h, c.d_ff, c.d_ff});
  t.push_back({prefix + "ff2.b", 1, c.d_h, c.d_ff});
  t.push_back({prefix + "an2.g", 1, c.d_h, 1, Init::kOnes});
  t.push_back({prefix + "an2.b", 1, c.d_h, 1, Init::kZeros});
}

}  // namespace

std::vector<ParameterShape> model_parameter_table(const ModelConfig& c) {
  c.validate();
  std::vector<ParameterShape> t;
  t.push_back({"in.op.W", c.d_h, kOpFeatures, kOpFeatures});
  t.push_back({"in.op.b", 1, c.d_h, kOpFeatures});
  t.push_back({"in.mach.W", c.d_h, kMachineFeatures, kMachineFeatures});
  t.push_back({"in.mach.b", 1, c.d_h, kMachineFeatures});
  t.push_back({"in.veh.W", c.d_h, kVehicleFeatures, kVehicleFeatures});
  t.push_back({"in.veh.b", 1, c.d_h, kVehicleFeatures});
  for (const char* e : {"om", "ov", "mm"}) {
    t.push_back({std::string("in.") + e + ".W", 1, 1, 1});
    t.push_back({std::string("in.") + e + ".b", 1, 1, 1});
  }
  for (int l = 1; l < c.layers; ++l) {
    const std::string p = "enc" + std::to_string(l) + ".";
    add_block(t, c, p + "O.", {"M", "V"});
    add_block(t, c, p + "M.", {"O", "M"});
    add_block(t, c, p + "V.", {"O"});
  }
  add_block(t, c, "enc" + std::to_string(c.layers) + ".G.", {"X"});
  for (int s = 1; s <= 3; ++s) {
    const std::string p = "dec.s" + std::to_string(s) + ".";
    const int q_in = s == 1 ? 2 * c.d_h : c.d_h;
    t.push_back({p + "Wq", c.d_h, q_in, q_in});
    t.push_back({p + "Wk", c.d_h, c.d_h, c.d_h});
    t.push_back({p + "Wv", c.d_h, c.d_h, c.d_h});
    t.push_back({p + "Wo", c.d_h, c.d_h, c.d_h});
  }
  return t;
}

ParameterStore init_model(const ModelConfig& cfg, std::uint64_t seed) {
  return init_parameters(model_parameter_table(cfg), seed);
}

void check_model_parameters(const ParameterStore& store, const ModelConfig& cfg) {
  const auto table = model_parameter_table(cfg);
  if (static_cast<int>(table.size()) != store.count())
    throw ConfigError("checkpoint holds " + std::to_string(store.count()) +
                      " parameters, model config needs " + std::to_string(table.size()));
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& p = store.at(static_cast<int>(i));
    const auto& s = table[i];
    if (p.name != s.name || p.value.rows() != s.rows || p.value.cols() != s.cols)
      throw ConfigError("checkpoint parameter " + p.name + " " + shape_string(p.value) +
                        " does not match " + s.name + " (" + std::to_string(s.rows) + "x" +
                        std::to_string(s.cols) + ")");
  }
}

}  // namespace hgs
