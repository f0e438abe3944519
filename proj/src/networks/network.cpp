#include "unbounded/networks/network.hpp"

#include <algorithm>
#include <stdexcept>

namespace unbounded::networks {

std::string_view family_name(Family f) { return f == Family::pinn ? "pinn" : "pikan"; }

Family parse_family(std::string_view name) {
  if (name == "pinn" || name == "mlp") return Family::pinn;
  if (name == "pikan" || name == "kan") return Family::pikan;
  throw std::invalid_argument("unknown network family: " + std::string(name));
}

std::size_t Network::parameter_count() const {
  return std::visit([](const auto& c) { return c.parameter_count(); }, config_);
}

std::vector<double> Network::init_parameters(std::uint64_t seed) const {
  if (const auto* m = std::get_if<MlpConfig>(&config_)) return mlp_init(*m, seed).flatten();
  return kan_init(std::get<KanConfig>(config_), seed).flatten();
}

void Network::forward_batch(std::span<const double> params, const autodiff::JetBatch& input,
                            Cache& cache, autodiff::JetBatch& out) const {
  if (const auto* m = std::get_if<MlpConfig>(&config_)) {
    if (!std::holds_alternative<MlpCache>(cache)) cache = MlpCache{};
    mlp_forward_batch(*m, params, input, std::get<MlpCache>(cache), out);
    return;
  }
  if (!std::holds_alternative<KanCache>(cache)) cache = KanCache{};
  kan_forward_batch(std::get<KanConfig>(config_), params, input, std::get<KanCache>(cache), out);
}

void Network::backward_batch(std::span<const double> params, Cache& cache,
                             const autodiff::JetBatch& grad_out, std::span<double> grad) const {
  if (const auto* m = std::get_if<MlpConfig>(&config_)) {
    mlp_backward_batch(*m, params, std::get<MlpCache>(cache), grad_out, grad);
    return;
  }
  kan_backward_batch(std::get<KanConfig>(config_), params, std::get<KanCache>(cache), grad_out, grad);
}

Eigen::VectorXd Network::values(std::span<const double> params, std::span<const double> xs,
                                std::span<const double> ys) const {
  if (xs.size() != ys.size()) throw std::invalid_argument("Network::values: x and y lengths differ");
  constexpr std::size_t kChunk = 2048;
  Eigen::VectorXd result(static_cast<Eigen::Index>(xs.size()));
  Cache cache;
  autodiff::JetBatch out;
  for (std::size_t start = 0; start < xs.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, xs.size() - start);
    const auto input = autodiff::JetBatch::seed(xs.subspan(start, len), ys.subspan(start, len), 0);
    forward_batch(params, input, cache, out);
    result.segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)) = out.v().col(0);
  }
  return result;
}

nlohmann::json Network::config_json() const {
  nlohmann::json j;
  j["family"] = std::string(family_name(family()));
  if (const auto* m = std::get_if<MlpConfig>(&config_)) {
    j["hidden_layers"] = m->hidden_layers;
    j["width"] = m->width;
    return j;
  }
  const auto& k = std::get<KanConfig>(config_);
  j["hidden_layers"] = k.hidden_layers;
  j["width"] = k.width;
  j["grid_size"] = k.grid_size;
  j["degree"] = k.degree;
  j["grid_range"] = {k.grid_lo, k.grid_hi};
  return j;
}

Network Network::from_config_json(const nlohmann::json& j) {
  const Family f = parse_family(j.at("family").get<std::string>());
  if (f == Family::pinn) {
    return Network(MlpConfig{j.at("hidden_layers").get<int>(), j.at("width").get<int>()});
  }
  KanConfig k;
  k.hidden_layers = j.at("hidden_layers").get<int>();
  k.width = j.at("width").get<int>();
  k.grid_size = j.value("grid_size", k.grid_size);
  k.degree = j.value("degree", k.degree);
  if (j.contains("grid_range")) {
    k.grid_lo = j["grid_range"].at(0).get<double>();
    k.grid_hi = j["grid_range"].at(1).get<double>();
  }
  return Network(k);
}

nlohmann::json checkpoint_json(const Network& net, std::span<const double> params,
                               std::uint64_t seed) {
  if (params.size() != net.parameter_count()) {
    throw std::invalid_argument("checkpoint_json: parameter vector has wrong length");
  }
  nlohmann::json j;
  j["format"] = "unbounded-params/1";
  j["network"] = net.config_json();
  j["seed"] = seed;
  j["parameters"] = std::vector<double>(params.begin(), params.end());
  return j;
}

std::pair<Network, std::vector<double>> network_from_checkpoint(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "unbounded-params/1") {
    throw std::invalid_argument("checkpoint: unrecognised format tag");
  }
  Network net = Network::from_config_json(j.at("network"));
  auto params = j.at("parameters").get<std::vector<double>>();
  if (params.size() != net.parameter_count()) {
    throw std::invalid_argument("checkpoint: parameter count does not match the network");
  }
  return {net, std::move(params)};
}

}  // namespace unbounded::networks
