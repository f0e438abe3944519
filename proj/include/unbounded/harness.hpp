#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "unbounded/loss.hpp"
#include "unbounded/networks/network.hpp"
#include "unbounded/problems.hpp"
#include "unbounded/sampling.hpp"
#include "unbounded/train.hpp"

namespace unbounded::harness {

using networks::Family;
using networks::Network;
using problems::DomainKind;
using problems::ProblemSpec;
using sampling::Box;

/// Everything that determines a run. Serialises to JSON without loss, and
/// every output file embeds it.
struct ExperimentConfig {
  ProblemSpec problem;
  Family family = Family::pinn;
  int hidden_layers = 16;
  int width = 32;
  int grid_size = 3;
  int degree = 3;
  double grid_lo = -3.0;
  double grid_hi = 3.0;
  std::size_t n_collocation = 10000;
  std::size_t n_obs = 5000;
  std::size_t n_bnd = 500;
  double noise_percent = 0.0;
  loss::LossWeights weights;
  train::Schedule schedule;
  std::uint64_t seed = 0;
  std::size_t eval_resolution = 200;
  Box generalization_box{-5.0, 5.0, -5.0, 5.0};
  // Collocation sampler: N(0, sigma^2) in x (and in y on the infinite
  // domain), Exp(rate_y) in y on the semi-infinite one.
  double sampler_sigma = 1.5;
  double sampler_rate_y = 2.0 / 3.0;

  /// Paper-scale defaults for a domain and family: (16,32) PINN or (5,10)
  /// PIKAN with that family's schedule.
  static ExperimentConfig defaults(DomainKind kind, Family family);

  void validate() const;
  Network u_network() const;
  Network k_network() const;

  nlohmann::json to_json() const;
  /// Starts from defaults(problem kind, family) and applies the keys present.
  /// Unknown keys are rejected so typos do not silently fall back.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

nlohmann::json problem_to_json(const ProblemSpec& spec);
ProblemSpec problem_from_json(const nlohmann::json& j);
nlohmann::json box_to_json(const Box& b);
Box box_from_json(const nlohmann::json& j);

/// Independent stream seeds derived from the run seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Collocation, observations (noisy when noise_percent > 0) and, on the
/// semi-infinite domain, boundary samples.
loss::Batch make_batch(const ExperimentConfig& config);

/// Regular grid over a box, `nx` by `ny` nodes including the edges. Points
/// are ordered with x fastest.
struct Grid {
  Box box;
  std::size_t nx = 200;
  std::size_t ny = 200;

  void validate() const;
  std::size_t size() const { return nx * ny; }
  double x(std::size_t i) const;
  double y(std::size_t j) const;
  std::vector<double> xs() const;
  std::vector<double> ys() const;
};

/// Signed error maps (prediction - exact) / max|exact| and aggregate
/// relative L2 errors ||prediction - exact|| / ||exact||.
struct Evaluation {
  Grid grid;
  std::vector<double> u_exact, u_pred, u_signed;
  std::vector<double> k_exact, k_pred, k_signed;
  double u_scale = 0.0;  // max |u_exact| on the grid
  double k_scale = 0.0;  // max |k_exact| on the grid
  double err_u_rel = 0.0;
  double err_k_rel = 0.0;
};

/// Scores predictions already evaluated at the grid points.
Evaluation evaluate_values(const ProblemSpec& spec, const Grid& grid, std::vector<double> u_pred,
                           std::vector<double> k_pred);

/// The two networks of one run and their parameters.
struct TrainedPair {
  Network u_net;
  Network k_net;
  std::vector<double> theta_u;
  std::vector<double> theta_k;

  /// Splits a concatenated [theta_u, theta_k] vector.
  static TrainedPair from_flat(Network u_net, Network k_net, std::span<const double> theta);
  nlohmann::json to_json(std::uint64_t seed) const;
  static TrainedPair from_json(const nlohmann::json& j);
};

Evaluation evaluate(const TrainedPair& pair, const ProblemSpec& spec, const Grid& grid);

/// Relative L2 error over the points where `mask` is set; nullopt when no
/// point is selected.
std::optional<double> masked_l2(std::span<const double> pred, std::span<const double> exact,
                                const std::vector<bool>& mask);

struct ExperimentReport {
  ExperimentConfig config;
  double wall_time_s = 0.0;  // train() only
  loss::LossValues final_loss;
  std::size_t epochs = 0;
  bool aborted = false;
  std::string diagnostic;
  std::size_t lbfgs_iterations = 0;
  std::size_t line_search_failures = 0;
  std::size_t u_parameters = 0;
  std::size_t k_parameters = 0;
  double err_u_rel = 0.0;
  double err_k_rel = 0.0;
  Evaluation evaluation;
  std::vector<train::HistoryRow> history;

  /// report.json contents; `wall_time_s` is the only run-to-run varying field.
  nlohmann::json to_json() const;
};

struct RunOptions {
  /// Output directory; nothing is written when empty.
  std::filesystem::path out_dir;
  std::size_t checkpoint_every = 0;
  std::function<void(const train::HistoryRow&)> on_epoch;
  std::function<void(const std::string&)> on_warning;
};

/// sample -> noise -> train -> evaluate -> persist. Training aborts are
/// reported through `aborted`, not thrown.
ExperimentReport run(const ExperimentConfig& config, const RunOptions& options = {});

/// Writes report.json, loss_history.csv, grid_u.csv and grid_k.csv.
void write_outputs(const ExperimentReport& report, const std::filesystem::path& dir);

/// CSV `x,y,exact,predicted,signed_error` preceded by `# ` comment lines.
void write_grid_csv(const std::filesystem::path& path, const Grid& grid,
                    std::span<const double> exact, std::span<const double> pred,
                    std::span<const double> signed_error, const std::string& header_comment);

// -- Sweeps -----------------------------------------------------------------

struct SweepRow {
  ExperimentConfig config;
  std::string status;  // "ok", "aborted" or "error: ..."
  std::optional<ExperimentReport> report;
};

struct SweepOptions {
  std::filesystem::path out_dir;
  /// Worker threads; each run stays single-threaded.
  unsigned jobs = 1;
  std::function<void(std::size_t index, const SweepRow&)> on_done;
};

/// Runs every config, up to `jobs` at a time. A failing run is recorded
/// and the rest continue. Results keep the input order.
std::vector<SweepRow> run_all(const std::vector<ExperimentConfig>& configs,
                              const SweepOptions& options,
                              const std::vector<std::string>& run_names);

std::vector<SweepRow> sweep_architectures(const ExperimentConfig& base,
                                          const std::vector<std::pair<int, int>>& archs,
                                          const SweepOptions& options = {});

/// n_bnd follows n_obs as ceil(n_obs / 10) on the semi-infinite domain.
std::vector<SweepRow> sweep_observations(const ExperimentConfig& base,
                                         const std::vector<std::size_t>& n_obs,
                                         const SweepOptions& options = {});

/// Every base config (typically one per family) at every percent. Seeds are
/// left as given, so each base sees the same samples at every level.
std::vector<SweepRow> sweep_noise(const std::vector<ExperimentConfig>& bases,
                                  const std::vector<double>& percents,
                                  const SweepOptions& options = {});

std::size_t boundary_count_for(std::size_t n_obs);

/// The five architectures of each family's sweep.
std::vector<std::pair<int, int>> default_architectures(Family family);

// -- Generalisation ---------------------------------------------------------

struct GeneralizationResult {
  Evaluation outer;  // maps over the outer box
  Box inner_box;
  std::optional<double> inner_err_u, inner_err_k;
  std::optional<double> outside_err_u, outside_err_k;  // empty when inner == outer
  double k_pred_min = 0.0;
  double k_pred_max = 0.0;

  nlohmann::json to_json() const;
};

bool contains(const Box& outer, const Box& inner);

GeneralizationResult generalization_map(const TrainedPair& pair, const ProblemSpec& spec,
                                        const Box& inner, const Box& outer,
                                        std::size_t resolution);

}  // namespace unbounded::harness
