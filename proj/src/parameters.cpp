#include "hgs/parameters.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hgs/errors.hpp"

namespace hgs {

using nlohmann::json;

int ParameterStore::add(const ParameterShape& shape) {
  if (by_name_.count(shape.name)) throw ContractError("duplicate parameter name " + shape.name);
  if (shape.rows <= 0 || shape.cols <= 0)
    throw ShapeError("parameter " + shape.name + " needs positive shape");
  Parameter p;
  p.name = shape.name;
  p.fan_in = shape.fan_in;
  p.value = Tensor2::Zero(shape.rows, shape.cols);
  p.grad = Tensor2::Zero(shape.rows, shape.cols);
  p.adam_m = Tensor2::Zero(shape.rows, shape.cols);
  p.adam_v = Tensor2::Zero(shape.rows, shape.cols);
  params_.push_back(std::move(p));
  const int index = static_cast<int>(params_.size()) - 1;
  by_name_.emplace(shape.name, index);
  return index;
}

int ParameterStore::index_of(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::out_of_range("no parameter named " + name);
  return it->second;
}

std::size_t ParameterStore::flat_size() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += static_cast<std::size_t>(p.value.size());
  return total;
}

std::pair<int, std::size_t> ParameterStore::locate(std::size_t flat) const {
  for (int i = 0; i < count(); ++i) {
    const auto n = static_cast<std::size_t>(params_[i].value.size());
    if (flat < n) return {i, flat};
    flat -= n;
  }
  throw std::out_of_range("flat parameter index out of range");
}

double ParameterStore::get(std::size_t flat) const {
  const auto [i, off] = locate(flat);
  return params_[i].value.data()[off];
}

void ParameterStore::set(std::size_t flat, double value) {
  const auto [i, off] = locate(flat);
  params_[i].value.data()[off] = value;
}

double ParameterStore::grad(std::size_t flat) const {
  const auto [i, off] = locate(flat);
  return params_[i].grad.data()[off];
}

std::string ParameterStore::describe(std::size_t flat) const {
  const auto [i, off] = locate(flat);
  const auto cols = static_cast<std::size_t>(params_[i].value.cols());
  return params_[i].name + "[" + std::to_string(off / cols) + "," + std::to_string(off % cols) + "]";
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.setZero(p.value.rows(), p.value.cols());
}

double ParameterStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) sq += p.grad.squaredNorm();
  return std::sqrt(sq);
}

void ParameterStore::scale_grad(double factor) {
  for (auto& p : params_) p.grad *= factor;
}

std::string ParameterStore::first_nonfinite_grad() const {
  for (const auto& p : params_)
    if (!p.grad.allFinite()) return p.name;
  return {};
}

bool operator==(const ParameterStore& a, const ParameterStore& b) {
  if (a.count() != b.count() || a.step_ != b.step_) return false;
  for (int i = 0; i < a.count(); ++i) {
    const auto& x = a.params_[i];
    const auto& y = b.params_[i];
    if (x.name != y.name || x.fan_in != y.fan_in || x.value != y.value || x.adam_m != y.adam_m ||
        x.adam_v != y.adam_v)
      return false;
  }
  return true;
}

ParameterStore init_parameters(const std::vector<ParameterShape>& table, std::uint64_t seed) {
  ParameterStore store;
  std::mt19937_64 rng(seed);
  for (const auto& shape : table) {
    const int index = store.add(shape);
    auto& value = store.at(index).value;
    if (shape.init == Init::kOnes) {
      value.setOnes();
      continue;
    }
    if (shape.init == Init::kZeros) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, shape.fan_in)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index k = 0; k < value.size(); ++k) value.data()[k] = dist(rng);
  }
  return store;
}

void adam_step(ParameterStore& store, const AdamConfig& cfg) {
  const std::int64_t step = store.step() + 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (int i = 0; i < store.count(); ++i) {
    auto& p = store.at(i);
    p.adam_m = cfg.beta1 * p.adam_m + (1.0 - cfg.beta1) * p.grad;
    p.adam_v = cfg.beta2 * p.adam_v + (1.0 - cfg.beta2) * p.grad.cwiseAbs2();
    const auto m_hat = p.adam_m.array() / c1;
    const auto v_hat = p.adam_v.array() / c2;
    p.value.array() -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
  }
  store.set_step(step);
}

namespace {

json flat_array(const Tensor2& t) {
  return json(std::vector<double>(t.data(), t.data() + t.size()));
}

Tensor2 read_matrix(const json& arr, int rows, int cols, const std::string& where) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != rows * cols)
    throw ConfigError("checkpoint " + where + ": expected " + std::to_string(rows * cols) +
                      " numbers");
  Tensor2 t(rows, cols);
  for (int k = 0; k < rows * cols; ++k) t.data()[k] = arr[k].get<double>();
  return t;
}

}  // namespace

void save_checkpoint(const ParameterStore& store, const json& metadata,
                     const std::filesystem::path& path) {
  json doc;
  doc["format"] = "hgs-checkpoint";
  doc["version"] = 1;
  doc["step"] = store.step();
  doc["metadata"] = metadata;
  json params = json::array();
  for (int i = 0; i < store.count(); ++i) {
    const auto& p = store.at(i);
    params.push_back({{"name", p.name},
                      {"rows", p.value.rows()},
                      {"cols", p.value.cols()},
                      {"fan_in", p.fan_in},
                      {"value", flat_array(p.value)},
                      {"adam_m", flat_array(p.adam_m)},
                      {"adam_v", flat_array(p.adam_v)}});
  }
  doc["parameters"] = std::move(params);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << doc.dump() << '\n';
  if (!out) throw std::runtime_error("I/O error writing checkpoint " + path.string());
}

ParameterStore load_checkpoint(const std::filesystem::path& path, json* metadata) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint " + path.string() + ": " + e.what());
  }
  if (doc.value("format", "") != "hgs-checkpoint" || doc.value("version", 0) != 1)
    throw ConfigError("checkpoint " + path.string() + ": unsupported format or version");
  ParameterStore store;
  try {
    for (const auto& p : doc.at("parameters")) {
      const auto name = p.at("name").get<std::string>();
      const int rows = p.at("rows").get<int>();
      const int cols = p.at("cols").get<int>();
      const int index = store.add({name, rows, cols, p.at("fan_in").get<int>()});
      auto& param = store.at(index);
      param.value = read_matrix(p.at("value"), rows, cols, name + ".value");
      param.adam_m = read_matrix(p.at("adam_m"), rows, cols, name + ".adam_m");
      param.adam_v = read_matrix(p.at("adam_v"), rows, cols, name + ".adam_v");
    }
    store.set_step(doc.at("step").get<std::int64_t>());
    if (metadata) *metadata = doc.value("metadata", json::object());
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint " + path.string() + ": " + e.what());
  }
  return store;
}

}  // namespace hgs
