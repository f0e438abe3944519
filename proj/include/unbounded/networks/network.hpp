#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "unbounded/networks/kan.hpp"
#include "unbounded/networks/mlp.hpp"

namespace unbounded::networks {

enum class Family { pinn, pikan };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

/// Architecture of one R^2 -> R network: a dense tanh MLP (PINN body) or a
/// B-spline KAN (PIKAN body). Parameters live outside, as a flat vector, so
/// two networks can share one optimiser vector.
class Network {
 public:
  explicit Network(MlpConfig config) : config_(config) { config.validate(); }
  explicit Network(KanConfig config) : config_(config) { config.validate(); }

  Family family() const noexcept {
    return std::holds_alternative<MlpConfig>(config_) ? Family::pinn : Family::pikan;
  }
  const MlpConfig& mlp() const { return std::get<MlpConfig>(config_); }
  const KanConfig& kan() const { return std::get<KanConfig>(config_); }

  std::size_t parameter_count() const;
  std::vector<double> init_parameters(std::uint64_t seed) const;

  /// Scalar forward on double, TapeScalar, or their jets.
  template <class P, class A>
  A forward(std::span<const P> params, const A& x, const A& y) const {
    if (params.size() != parameter_count()) {
      throw std::invalid_argument("Network::forward: parameter vector has wrong length");
    }
    if (const auto* m = std::get_if<MlpConfig>(&config_)) return mlp_forward<P, A>(*m, params, x, y);
    return kan_forward<P, A>(std::get<KanConfig>(config_), params, x, y);
  }

  double value(std::span<const double> params, double x, double y) const {
    return forward<double, double>(params, x, y);
  }

  /// Intermediates and scratch for the batched passes. Reusing one cache
  /// across calls avoids reallocating on every chunk.
  using Cache = std::variant<MlpCache, KanCache>;

  void forward_batch(std::span<const double> params, const autodiff::JetBatch& input, Cache& cache,
                     autodiff::JetBatch& out) const;
  /// Adjoint of the most recent forward_batch on `cache`; accumulates into grad.
  void backward_batch(std::span<const double> params, Cache& cache,
                      const autodiff::JetBatch& grad_out, std::span<double> grad) const;

  /// Plain values at many points through the batched path.
  Eigen::VectorXd values(std::span<const double> params, std::span<const double> xs,
                         std::span<const double> ys) const;

  nlohmann::json config_json() const;
  static Network from_config_json(const nlohmann::json& j);

 private:
  std::variant<MlpConfig, KanConfig> config_;
};

/// Self-describing parameter checkpoint:
/// {"format": "unbounded-params/1", "network": {family, hidden_layers, width,
///  [grid_size, degree, grid_range]}, "seed": s, "parameters": [doubles]}.
/// Doubles are written with round-trip precision.
nlohmann::json checkpoint_json(const Network& net, std::span<const double> params,
                               std::uint64_t seed);
std::pair<Network, std::vector<double>> network_from_checkpoint(const nlohmann::json& j);

}  // namespace unbounded::networks
