#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "unbounded/loss.hpp"
#include "unbounded/networks/network.hpp"

namespace unbounded::train {

struct Schedule {
  std::size_t adam_epochs = 15000;
  double adam_lr = 1e-4;
  std::size_t lbfgs_epochs = 1500;
  double lbfgs_lr = 0.5;

  static Schedule pinn();
  static Schedule pikan();
  /// Per-family default; `desk` divides both epoch counts by three.
  static Schedule defaults(networks::Family family, bool desk = false);

  void validate() const;
  nlohmann::json to_json() const;
  static Schedule from_json(const nlohmann::json& j);
};

struct HistoryRow {
  std::size_t epoch = 0;
  loss::LossValues loss;
  double wall_ms = 0.0;
};

struct TrainOptions {
  /// Called every `checkpoint_every` epochs (0 disables) and with the last
  /// finite parameters when training aborts.
  std::size_t checkpoint_every = 0;
  std::function<void(std::span<const double> params, std::size_t epoch)> on_checkpoint;
  /// Progress hook, called once per epoch.
  std::function<void(const HistoryRow&)> on_epoch;
  /// L-BFGS warnings (failed line searches).
  std::function<void(const std::string&)> on_warning;
};

struct TrainResult {
  std::vector<double> params;
  std::vector<HistoryRow> history;
  bool aborted = false;
  std::string diagnostic;
  double wall_s = 0.0;
  std::size_t line_search_failures = 0;
  /// L-BFGS iterations actually run (the phase stops early when the line
  /// search cannot move from a steepest-descent start).
  std::size_t lbfgs_iterations = 0;
};

/// Adam then L-BFGS on the concatenated [theta_u, theta_k] vector.
/// Never throws on a non-finite loss: returns with `aborted` set and the
/// last finite parameters instead.
TrainResult train(const loss::LossEvaluator& objective, std::vector<double> initial,
                  const Schedule& schedule, const TrainOptions& options = {});

/// Initial [theta_u, theta_k] for a seed (k-net gets the next seed).
std::vector<double> initial_parameters(const networks::Network& u_net,
                                       const networks::Network& k_net, std::uint64_t seed);

/// `epoch,loss_total,loss_pde,loss_u,loss_k,loss_bnd,wall_ms`, preceded by
/// `# ` comment lines carrying `header_comment` (may be empty).
void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path,
                       const std::string& header_comment = {});

}  // namespace unbounded::train
