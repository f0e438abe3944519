#include "unbounded/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace unbounded::harness {

namespace {

constexpr const char* kErrorNote =
    "aggregate error = ||pred - exact||_2 / ||exact||_2 over the grid; "
    "signed_error = (pred - exact) / max|exact| over the grid";

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected a JSON object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw std::invalid_argument(where + ": unknown key '" + item.key() + "'");
  }
}

std::string comment_block(const nlohmann::json& config, const std::string& extra) {
  std::string s = "config: " + config.dump();
  if (!extra.empty()) s += "\n" + extra;
  return s;
}

void write_comment(std::ostream& out, const std::string& text) {
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace

// -- Configuration ----------------------------------------------------------

nlohmann::json box_to_json(const Box& b) { return {b.x_lo, b.x_hi, b.y_lo, b.y_hi}; }

Box box_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw std::invalid_argument("box: expected [x_lo, x_hi, y_lo, y_hi]");
  }
  Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!(b.x_lo < b.x_hi) || !(b.y_lo < b.y_hi)) {
    throw std::invalid_argument("box: bounds must satisfy lo < hi");
  }
  return b;
}

nlohmann::json problem_to_json(const ProblemSpec& spec) {
  return {{"kind", std::string(problems::domain_name(spec.kind))},
          {"alpha", spec.alpha},
          {"beta", spec.beta},
          {"epsilon", spec.epsilon},
          {"shift", spec.shift},
          {"eval_box", box_to_json(spec.eval_box)}};
}

ProblemSpec problem_from_json(const nlohmann::json& j) {
  check_keys(j, {"kind", "alpha", "beta", "epsilon", "shift", "eval_box"}, "problem");
  const DomainKind kind = problems::parse_domain(j.value("kind", std::string("infinite")));
  ProblemSpec s = kind == DomainKind::infinite ? ProblemSpec::infinite() : ProblemSpec::semi_infinite();
  s.alpha = j.value("alpha", s.alpha);
  s.beta = j.value("beta", s.beta);
  s.epsilon = j.value("epsilon", s.epsilon);
  s.shift = j.value("shift", s.shift);
  if (j.contains("eval_box")) s.eval_box = box_from_json(j["eval_box"]);
  s.validate();
  return s;
}

ExperimentConfig ExperimentConfig::defaults(DomainKind kind, Family family) {
  ExperimentConfig c;
  c.problem = kind == DomainKind::infinite ? ProblemSpec::infinite() : ProblemSpec::semi_infinite();
  c.family = family;
  if (family == Family::pikan) {
    c.hidden_layers = 5;
    c.width = 10;
  }
  c.schedule = train::Schedule::defaults(family);
  c.generalization_box =
      kind == DomainKind::infinite ? Box{-5.0, 5.0, -5.0, 5.0} : Box{-5.0, 5.0, 0.0, 5.0};
  return c;
}

void ExperimentConfig::validate() const {
  problem.validate();
  weights.validate();
  schedule.validate();
  if (n_collocation == 0) throw std::invalid_argument("config: n_collocation must be positive");
  if (n_obs == 0) throw std::invalid_argument("config: n_obs must be positive");
  if (problem.kind == DomainKind::semi_infinite && n_bnd == 0) {
    throw std::invalid_argument("config: the semi-infinite domain needs boundary samples");
  }
  if (!(noise_percent >= 0.0) || !std::isfinite(noise_percent)) {
    throw std::invalid_argument("config: noise_percent must be finite and >= 0");
  }
  if (eval_resolution < 2) throw std::invalid_argument("config: eval_resolution must be >= 2");
  if (!(sampler_sigma > 0.0) || !(sampler_rate_y > 0.0)) {
    throw std::invalid_argument("config: sampler sigma and rate must be positive");
  }
  (void)u_network();
}

Network ExperimentConfig::u_network() const {
  if (family == Family::pinn) return Network(networks::MlpConfig{hidden_layers, width});
  networks::KanConfig k;
  k.hidden_layers = hidden_layers;
  k.width = width;
  k.grid_size = grid_size;
  k.degree = degree;
  k.grid_lo = grid_lo;
  k.grid_hi = grid_hi;
  return Network(k);
}

Network ExperimentConfig::k_network() const { return u_network(); }

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json net = {{"family", std::string(networks::family_name(family))},
                        {"hidden_layers", hidden_layers},
                        {"width", width}};
  if (family == Family::pikan) {
    net["grid_size"] = grid_size;
    net["degree"] = degree;
    net["grid_range"] = {grid_lo, grid_hi};
  }
  return {{"problem", problem_to_json(problem)},
          {"network", net},
          {"n_collocation", n_collocation},
          {"n_obs", n_obs},
          {"n_bnd", n_bnd},
          {"noise_percent", noise_percent},
          {"weights", {{"pde", weights.pde}, {"u", weights.u}, {"k", weights.k}, {"bnd", weights.bnd}}},
          {"schedule", schedule.to_json()},
          {"seed", seed},
          {"eval_resolution", eval_resolution},
          {"generalization_box", box_to_json(generalization_box)},
          {"sampler", {{"sigma", sampler_sigma}, {"rate_y", sampler_rate_y}}}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  check_keys(j,
             {"problem", "network", "n_collocation", "n_obs", "n_bnd", "noise_percent", "weights",
              "schedule", "seed", "eval_resolution", "generalization_box", "sampler"},
             "config");
  const ProblemSpec problem = problem_from_json(j.value("problem", nlohmann::json::object()));
  const nlohmann::json net = j.value("network", nlohmann::json::object());
  check_keys(net, {"family", "hidden_layers", "width", "grid_size", "degree", "grid_range"}, "network");
  const Family family = networks::parse_family(net.value("family", std::string("pinn")));

  ExperimentConfig c = defaults(problem.kind, family);
  c.problem = problem;
  c.hidden_layers = net.value("hidden_layers", c.hidden_layers);
  c.width = net.value("width", c.width);
  c.grid_size = net.value("grid_size", c.grid_size);
  c.degree = net.value("degree", c.degree);
  if (net.contains("grid_range")) {
    c.grid_lo = net["grid_range"].at(0).get<double>();
    c.grid_hi = net["grid_range"].at(1).get<double>();
  }
  c.n_collocation = j.value("n_collocation", c.n_collocation);
  c.n_obs = j.value("n_obs", c.n_obs);
  c.n_bnd = j.value("n_bnd", c.n_bnd);
  c.noise_percent = j.value("noise_percent", c.noise_percent);
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    check_keys(w, {"pde", "u", "k", "bnd"}, "weights");
    c.weights.pde = w.value("pde", c.weights.pde);
    c.weights.u = w.value("u", c.weights.u);
    c.weights.k = w.value("k", c.weights.k);
    c.weights.bnd = w.value("bnd", c.weights.bnd);
  }
  if (j.contains("schedule")) {
    check_keys(j["schedule"], {"adam_epochs", "adam_lr", "lbfgs_epochs", "lbfgs_lr"}, "schedule");
    nlohmann::json merged = c.schedule.to_json();
    merged.update(j["schedule"]);
    c.schedule = train::Schedule::from_json(merged);
  }
  c.seed = j.value("seed", c.seed);
  c.eval_resolution = j.value("eval_resolution", c.eval_resolution);
  if (j.contains("generalization_box")) c.generalization_box = box_from_json(j["generalization_box"]);
  if (j.contains("sampler")) {
    check_keys(j["sampler"], {"sigma", "rate_y"}, "sampler");
    c.sampler_sigma = j["sampler"].value("sigma", c.sampler_sigma);
    c.sampler_rate_y = j["sampler"].value("rate_y", c.sampler_rate_y);
  }
  c.validate();
  return c;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

loss::Batch make_batch(const ExperimentConfig& c) {
  const ProblemSpec& p = c.problem;
  loss::Batch b;
  if (p.kind == DomainKind::infinite) {
    b.collocation = sampling::sample_infinite(c.n_collocation, {0.0, 0.0},
                                              {c.sampler_sigma, c.sampler_sigma},
                                              derive_seed(c.seed, 1));
  } else {
    b.collocation = sampling::sample_semi_infinite(c.n_collocation, 0.0, c.sampler_sigma,
                                                   c.sampler_rate_y, derive_seed(c.seed, 1));
  }
  b.obs_points = sampling::sample_uniform_box(c.n_obs, p.eval_box, derive_seed(c.seed, 2));
  std::vector<double> u(c.n_obs);
  std::vector<double> k(c.n_obs);
  for (std::size_t i = 0; i < c.n_obs; ++i) {
    u[i] = problems::u_exact(p, b.obs_points.xs[i], b.obs_points.ys[i]);
    k[i] = problems::k_exact(p, b.obs_points.ys[i]);
  }
  b.obs_u = sampling::add_noise(u, c.noise_percent, derive_seed(c.seed, 4));
  b.obs_k = sampling::add_noise(k, c.noise_percent, derive_seed(c.seed, 5));
  if (p.kind == DomainKind::semi_infinite) {
    b.bnd_points = sampling::sample_boundary(c.n_bnd, p.eval_box.x_lo, p.eval_box.x_hi,
                                             derive_seed(c.seed, 3));
    std::vector<double> g(c.n_bnd);
    for (std::size_t i = 0; i < c.n_bnd; ++i) g[i] = problems::boundary_trace(p, b.bnd_points.xs[i]);
    b.bnd_u = sampling::add_noise(g, c.noise_percent, derive_seed(c.seed, 6));
  }
  return b;
}

// -- Evaluation -------------------------------------------------------------

void Grid::validate() const {
  if (nx < 2 || ny < 2) throw std::invalid_argument("grid: need at least 2 nodes per axis");
  if (!(box.x_lo < box.x_hi) || !(box.y_lo < box.y_hi)) {
    throw std::invalid_argument("grid: degenerate box");
  }
}

double Grid::x(std::size_t i) const {
  return box.x_lo + (box.x_hi - box.x_lo) * static_cast<double>(i) / static_cast<double>(nx - 1);
}

double Grid::y(std::size_t j) const {
  return box.y_lo + (box.y_hi - box.y_lo) * static_cast<double>(j) / static_cast<double>(ny - 1);
}

std::vector<double> Grid::xs() const {
  std::vector<double> out(size());
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) out[j * nx + i] = x(i);
  }
  return out;
}

std::vector<double> Grid::ys() const {
  std::vector<double> out(size());
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) out[j * nx + i] = y(j);
  }
  return out;
}

namespace {

// Signed map and relative L2 error of one field.
void score(std::span<const double> exact, std::span<const double> pred, double& scale,
           std::vector<double>& signed_error, double& rel) {
  scale = 0.0;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    scale = std::max(scale, std::abs(exact[i]));
    num += (pred[i] - exact[i]) * (pred[i] - exact[i]);
    den += exact[i] * exact[i];
  }
  if (!(scale > 0.0)) throw std::invalid_argument("evaluate: exact field vanishes on the grid");
  signed_error.resize(exact.size());
  for (std::size_t i = 0; i < exact.size(); ++i) signed_error[i] = (pred[i] - exact[i]) / scale;
  rel = std::sqrt(num / den);
}

}  // namespace

Evaluation evaluate_values(const ProblemSpec& spec, const Grid& grid, std::vector<double> u_pred,
                           std::vector<double> k_pred) {
  grid.validate();
  if (u_pred.size() != grid.size() || k_pred.size() != grid.size()) {
    throw std::invalid_argument("evaluate: prediction count does not match the grid");
  }
  Evaluation e;
  e.grid = grid;
  e.u_exact.resize(grid.size());
  e.k_exact.resize(grid.size());
  for (std::size_t j = 0; j < grid.ny; ++j) {
    const double y = grid.y(j);
    for (std::size_t i = 0; i < grid.nx; ++i) {
      e.u_exact[j * grid.nx + i] = problems::u_exact(spec, grid.x(i), y);
      e.k_exact[j * grid.nx + i] = problems::k_exact(spec, y);
    }
  }
  e.u_pred = std::move(u_pred);
  e.k_pred = std::move(k_pred);
  score(e.u_exact, e.u_pred, e.u_scale, e.u_signed, e.err_u_rel);
  score(e.k_exact, e.k_pred, e.k_scale, e.k_signed, e.err_k_rel);
  return e;
}

TrainedPair TrainedPair::from_flat(Network u_net, Network k_net, std::span<const double> theta) {
  const std::size_t nu = u_net.parameter_count();
  if (theta.size() != nu + k_net.parameter_count()) {
    throw std::invalid_argument("TrainedPair: parameter vector has wrong length");
  }
  TrainedPair p{std::move(u_net), std::move(k_net), {}, {}};
  p.theta_u.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(nu));
  p.theta_k.assign(theta.begin() + static_cast<std::ptrdiff_t>(nu), theta.end());
  return p;
}

nlohmann::json TrainedPair::to_json(std::uint64_t seed) const {
  return {{"format", "unbounded-pair/1"},
          {"u", networks::checkpoint_json(u_net, theta_u, seed)},
          {"k", networks::checkpoint_json(k_net, theta_k, seed)}};
}

TrainedPair TrainedPair::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "unbounded-pair/1") {
    throw std::invalid_argument("checkpoint: unrecognised format tag");
  }
  auto [u_net, theta_u] = networks::network_from_checkpoint(j.at("u"));
  auto [k_net, theta_k] = networks::network_from_checkpoint(j.at("k"));
  return TrainedPair{std::move(u_net), std::move(k_net), std::move(theta_u), std::move(theta_k)};
}

Evaluation evaluate(const TrainedPair& pair, const ProblemSpec& spec, const Grid& grid) {
  grid.validate();
  const std::vector<double> xs = grid.xs();
  const std::vector<double> ys = grid.ys();
  const Eigen::VectorXd u = pair.u_net.values(pair.theta_u, xs, ys);
  const Eigen::VectorXd k = pair.k_net.values(pair.theta_k, xs, ys);
  return evaluate_values(spec, grid, std::vector<double>(u.begin(), u.end()),
                         std::vector<double>(k.begin(), k.end()));
}

std::optional<double> masked_l2(std::span<const double> pred, std::span<const double> exact,
                                const std::vector<bool>& mask) {
  double num = 0.0;
  double den = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    if (!mask[i]) continue;
    any = true;
    num += (pred[i] - exact[i]) * (pred[i] - exact[i]);
    den += exact[i] * exact[i];
  }
  if (!any) return std::nullopt;
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

// -- Single runs ------------------------------------------------------------

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["format"] = "unbounded-report/1";
  j["config"] = config.to_json();
  j["seed"] = config.seed;
  j["wall_time_s"] = wall_time_s;
  j["error_norm"] = kErrorNote;
  j["err_u_rel"] = err_u_rel;
  j["err_k_rel"] = err_k_rel;
  j["final_loss"] = {{"total", final_loss.total},
                     {"pde", final_loss.pde},
                     {"u", final_loss.u},
                     {"k", final_loss.k},
                     {"bnd", final_loss.bnd}};
  j["epochs"] = epochs;
  j["aborted"] = aborted;
  j["diagnostic"] = diagnostic;
  j["lbfgs_iterations"] = lbfgs_iterations;
  j["line_search_failures"] = line_search_failures;
  j["parameters"] = {{"u", u_parameters}, {"k", k_parameters}, {"total", u_parameters + k_parameters}};
  j["grid"] = {{"box", box_to_json(evaluation.grid.box)},
               {"nx", evaluation.grid.nx},
               {"ny", evaluation.grid.ny},
               {"u_scale", evaluation.u_scale},
               {"k_scale", evaluation.k_scale}};
  return j;
}

void write_grid_csv(const std::filesystem::path& path, const Grid& grid,
                    std::span<const double> exact, std::span<const double> pred,
                    std::span<const double> signed_error, const std::string& header_comment) {
  auto out = open_out(path);
  write_comment(out, header_comment);
  out << "x,y,exact,predicted,signed_error\n" << std::setprecision(17);
  for (std::size_t j = 0; j < grid.ny; ++j) {
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const std::size_t n = j * grid.nx + i;
      out << grid.x(i) << ',' << grid.y(j) << ',' << exact[n] << ',' << pred[n] << ','
          << signed_error[n] << '\n';
    }
  }
}

void write_outputs(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const nlohmann::json cfg = report.config.to_json();
  write_json(dir / "report.json", report.to_json());
  train::write_history_csv(report.history, dir / "loss_history.csv", comment_block(cfg, ""));
  const Evaluation& e = report.evaluation;
  write_grid_csv(dir / "grid_u.csv", e.grid, e.u_exact, e.u_pred, e.u_signed,
                 comment_block(cfg, std::string("field: u; ") + kErrorNote));
  write_grid_csv(dir / "grid_k.csv", e.grid, e.k_exact, e.k_pred, e.k_signed,
                 comment_block(cfg, std::string("field: k; ") + kErrorNote));
}

ExperimentReport run(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const Network u_net = config.u_network();
  const Network k_net = config.k_network();
  loss::LossEvaluator objective(u_net, k_net, make_batch(config), config.weights, config.problem);

  const bool persist = !options.out_dir.empty();
  if (persist) std::filesystem::create_directories(options.out_dir);

  train::TrainOptions topt;
  topt.checkpoint_every = options.checkpoint_every;
  topt.on_epoch = options.on_epoch;
  topt.on_warning = options.on_warning;
  if (persist) {
    topt.on_checkpoint = [&](std::span<const double> theta, std::size_t epoch) {
      const auto dir = options.out_dir / "checkpoints";
      std::filesystem::create_directories(dir);
      std::ostringstream name;
      name << "epoch_" << std::setw(6) << std::setfill('0') << epoch << ".json";
      nlohmann::json j = TrainedPair::from_flat(u_net, k_net, theta).to_json(config.seed);
      j["config"] = config.to_json();
      j["epoch"] = epoch;
      write_json(dir / name.str(), j);
    };
  }

  train::TrainResult result =
      train::train(objective, train::initial_parameters(u_net, k_net, derive_seed(config.seed, 0)),
                   config.schedule, topt);

  ExperimentReport report;
  report.config = config;
  report.wall_time_s = result.wall_s;
  report.final_loss = objective.evaluate(result.params, {});
  report.epochs = result.history.empty() ? 0 : result.history.back().epoch;
  report.aborted = result.aborted;
  report.diagnostic = result.diagnostic;
  report.lbfgs_iterations = result.lbfgs_iterations;
  report.line_search_failures = result.line_search_failures;
  report.u_parameters = u_net.parameter_count();
  report.k_parameters = k_net.parameter_count();
  const TrainedPair pair = TrainedPair::from_flat(u_net, k_net, result.params);
  report.evaluation =
      evaluate(pair, config.problem, Grid{config.problem.eval_box, config.eval_resolution,
                                          config.eval_resolution});
  report.err_u_rel = report.evaluation.err_u_rel;
  report.err_k_rel = report.evaluation.err_k_rel;
  report.history = std::move(result.history);

  if (persist) {
    write_outputs(report, options.out_dir);
    nlohmann::json j = pair.to_json(config.seed);
    j["config"] = config.to_json();
    write_json(options.out_dir / "checkpoint.json", j);
  }
  return report;
}

// -- Sweeps -----------------------------------------------------------------

std::size_t boundary_count_for(std::size_t n_obs) { return (n_obs + 9) / 10; }

std::vector<std::pair<int, int>> default_architectures(Family family) {
  if (family == Family::pinn) return {{4, 8}, {8, 16}, {16, 32}, {32, 64}, {64, 128}};
  return {{2, 4}, {3, 6}, {4, 8}, {5, 10}, {6, 12}};
}

namespace {

constexpr const char* kSummaryHeader =
    "run,family,hidden_layers,width,params,n_collocation,n_obs,n_bnd,noise_percent,seed,"
    "wall_time_s,err_u_rel,err_k_rel,status";

void write_summary(const std::filesystem::path& path, const std::vector<SweepRow>& rows,
                   const std::vector<std::string>& names, const std::string& comment) {
  auto out = open_out(path);
  write_comment(out, comment);
  out << kSummaryHeader << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& c = rows[i].config;
    out << names[i] << ',' << networks::family_name(c.family) << ',' << c.hidden_layers << ','
        << c.width << ',';
    if (rows[i].report) {
      const auto& r = *rows[i].report;
      out << r.u_parameters + r.k_parameters;
    }
    out << ',' << c.n_collocation << ',' << c.n_obs << ',' << c.n_bnd << ',' << c.noise_percent
        << ',' << c.seed << ',';
    if (rows[i].report) {
      const auto& r = *rows[i].report;
      out << r.wall_time_s << ',' << r.err_u_rel << ',' << r.err_k_rel;
    } else {
      out << ",,";
    }
    std::string status = rows[i].status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << ',' << status << '\n';
  }
}

void write_script(const std::filesystem::path& path, const std::string& body) {
  auto out = open_out(path);
  out << "# gnuplot script; run from this directory: gnuplot " << path.filename().string() << "\n"
      << "set datafile separator ','\n"
      << "set terminal pngcairo size 900,600\n"
      << body;
}

std::string summary_comment(const ExperimentConfig& base, const std::string& what) {
  return comment_block(base.to_json(), "sweep: " + what + "\n" + kErrorNote);
}

}  // namespace

std::vector<SweepRow> run_all(const std::vector<ExperimentConfig>& configs,
                              const SweepOptions& options,
                              const std::vector<std::string>& run_names) {
  if (configs.empty()) throw std::invalid_argument("sweep: nothing to run");
  if (run_names.size() != configs.size()) throw std::invalid_argument("sweep: one name per run");
  std::vector<SweepRow> rows(configs.size());
  std::atomic<std::size_t> next{0};
  std::mutex done_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      SweepRow row{configs[i], "ok", std::nullopt};
      try {
        RunOptions ro;
        if (!options.out_dir.empty()) ro.out_dir = options.out_dir / run_names[i];
        row.report = run(configs[i], ro);
        if (row.report->aborted) row.status = "aborted: " + row.report->diagnostic;
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
      rows[i] = std::move(row);
      if (options.on_done) {
        std::lock_guard lock(done_mutex);
        options.on_done(i, rows[i]);
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(configs.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  return rows;
}

std::vector<SweepRow> sweep_architectures(const ExperimentConfig& base,
                                          const std::vector<std::pair<int, int>>& archs,
                                          const SweepOptions& options) {
  if (archs.empty()) throw std::invalid_argument("sweep_architectures: empty list");
  std::vector<ExperimentConfig> configs;
  std::vector<std::string> names;
  for (auto [l, w] : archs) {
    ExperimentConfig c = base;
    c.hidden_layers = l;
    c.width = w;
    configs.push_back(c);
    names.push_back(std::string(networks::family_name(c.family)) + "_" + std::to_string(l) + "x" +
                    std::to_string(w));
  }
  auto rows = run_all(configs, options, names);
  if (!options.out_dir.empty()) {
    write_summary(options.out_dir / "summary.csv", rows, names, summary_comment(base, "architectures"));
    write_script(options.out_dir / "plot.gp",
                 "set output 'arch.png'\n"
                 "set logscale xy\n"
                 "set xlabel 'training wall time [s]'\n"
                 "set ylabel 'relative L2 error of k'\n"
                 "plot 'summary.csv' every ::1 using 11:13 with linespoints title 'k', \\\n"
                 "     '' every ::1 using 11:13:(sprintf('(%d,%d)', $3, $4)) with labels offset 1,1 notitle\n");
  }
  return rows;
}

std::vector<SweepRow> sweep_observations(const ExperimentConfig& base,
                                         const std::vector<std::size_t>& n_obs,
                                         const SweepOptions& options) {
  if (n_obs.empty()) throw std::invalid_argument("sweep_observations: empty list");
  std::vector<ExperimentConfig> configs;
  std::vector<std::string> names;
  for (std::size_t n : n_obs) {
    ExperimentConfig c = base;
    c.n_obs = n;
    if (c.problem.kind == DomainKind::semi_infinite) c.n_bnd = boundary_count_for(n);
    configs.push_back(c);
    names.push_back("obs_" + std::to_string(n));
  }
  auto rows = run_all(configs, options, names);
  if (!options.out_dir.empty()) {
    write_summary(options.out_dir / "summary.csv", rows, names, summary_comment(base, "observations"));
    write_script(options.out_dir / "plot.gp",
                 "set output 'observations.png'\n"
                 "set logscale xy\n"
                 "set xlabel 'interior observations'\n"
                 "set ylabel 'relative L2 error'\n"
                 "plot 'summary.csv' every ::1 using 7:13 with linespoints title 'k', \\\n"
                 "     '' every ::1 using 7:12 with linespoints title 'u'\n");
  }
  return rows;
}

std::vector<SweepRow> sweep_noise(const std::vector<ExperimentConfig>& bases,
                                  const std::vector<double>& percents,
                                  const SweepOptions& options) {
  if (bases.empty() || percents.empty()) throw std::invalid_argument("sweep_noise: empty list");
  std::vector<ExperimentConfig> configs;
  std::vector<std::string> names;
  for (const auto& base : bases) {
    for (double p : percents) {
      ExperimentConfig c = base;
      c.noise_percent = p;
      configs.push_back(c);
      std::ostringstream name;
      name << networks::family_name(c.family) << "_noise_" << p;
      names.push_back(name.str());
    }
  }
  auto rows = run_all(configs, options, names);
  if (!options.out_dir.empty()) {
    write_summary(options.out_dir / "summary.csv", rows, names, summary_comment(bases.front(), "noise"));
    write_script(options.out_dir / "plot.gp",
                 "set output 'noise.png'\n"
                 "set xlabel 'noise [%]'\n"
                 "set ylabel 'relative L2 error of k'\n"
                 "plot 'summary.csv' every ::1 using 9:(strcol(2) eq 'pinn' ? $13 : NaN) "
                 "with linespoints title 'PINN', \\\n"
                 "     '' every ::1 using 9:(strcol(2) eq 'pikan' ? $13 : NaN) "
                 "with linespoints title 'PIKAN'\n");
  }
  return rows;
}

// -- Generalisation ---------------------------------------------------------

bool contains(const Box& outer, const Box& inner) {
  return outer.x_lo <= inner.x_lo && inner.x_hi <= outer.x_hi && outer.y_lo <= inner.y_lo &&
         inner.y_hi <= outer.y_hi;
}

nlohmann::json GeneralizationResult::to_json() const {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"outer_box", box_to_json(outer.grid.box)},
          {"inner_box", box_to_json(inner_box)},
          {"resolution", outer.grid.nx},
          {"err_u_rel_all", outer.err_u_rel},
          {"err_k_rel_all", outer.err_k_rel},
          {"err_u_rel_inside", opt(inner_err_u)},
          {"err_k_rel_inside", opt(inner_err_k)},
          {"err_u_rel_outside", opt(outside_err_u)},
          {"err_k_rel_outside", opt(outside_err_k)},
          {"k_pred_min", k_pred_min},
          {"k_pred_max", k_pred_max},
          {"error_norm", kErrorNote}};
}

GeneralizationResult generalization_map(const TrainedPair& pair, const ProblemSpec& spec,
                                        const Box& inner, const Box& outer,
                                        std::size_t resolution) {
  if (!contains(outer, inner)) throw std::invalid_argument("generalization_map: boxes are not nested");
  GeneralizationResult g;
  g.inner_box = inner;
  g.outer = evaluate(pair, spec, Grid{outer, resolution, resolution});
  const Grid& grid = g.outer.grid;
  std::vector<bool> in(grid.size());
  std::vector<bool> out(grid.size());
  for (std::size_t j = 0; j < grid.ny; ++j) {
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const bool inside = inner.contains(grid.x(i), grid.y(j));
      in[j * grid.nx + i] = inside;
      out[j * grid.nx + i] = !inside;
    }
  }
  g.inner_err_u = masked_l2(g.outer.u_pred, g.outer.u_exact, in);
  g.inner_err_k = masked_l2(g.outer.k_pred, g.outer.k_exact, in);
  g.outside_err_u = masked_l2(g.outer.u_pred, g.outer.u_exact, out);
  g.outside_err_k = masked_l2(g.outer.k_pred, g.outer.k_exact, out);
  const auto [lo, hi] = std::minmax_element(g.outer.k_pred.begin(), g.outer.k_pred.end());
  g.k_pred_min = *lo;
  g.k_pred_max = *hi;
  return g;
}

}  // namespace unbounded::harness
