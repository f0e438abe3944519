#include "unbounded/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "unbounded/optim.hpp"

namespace unbounded::train {

Schedule Schedule::pinn() { return Schedule{15000, 1e-4, 1500, 0.5}; }
Schedule Schedule::pikan() { return Schedule{1500, 1e-4, 500, 0.5}; }

Schedule Schedule::defaults(networks::Family family, bool desk) {
  Schedule s = family == networks::Family::pinn ? pinn() : pikan();
  if (desk) {
    s.adam_epochs /= 3;
    s.lbfgs_epochs /= 3;
  }
  return s;
}

void Schedule::validate() const {
  if (!(adam_lr > 0.0) || !(lbfgs_lr > 0.0)) {
    throw std::invalid_argument("Schedule: learning rates must be positive");
  }
}

nlohmann::json Schedule::to_json() const {
  return {{"adam_epochs", adam_epochs},
          {"adam_lr", adam_lr},
          {"lbfgs_epochs", lbfgs_epochs},
          {"lbfgs_lr", lbfgs_lr}};
}

Schedule Schedule::from_json(const nlohmann::json& j) {
  Schedule s;
  s.adam_epochs = j.value("adam_epochs", s.adam_epochs);
  s.adam_lr = j.value("adam_lr", s.adam_lr);
  s.lbfgs_epochs = j.value("lbfgs_epochs", s.lbfgs_epochs);
  s.lbfgs_lr = j.value("lbfgs_lr", s.lbfgs_lr);
  s.validate();
  return s;
}

std::vector<double> initial_parameters(const networks::Network& u_net,
                                       const networks::Network& k_net, std::uint64_t seed) {
  std::vector<double> theta = u_net.init_parameters(seed);
  const std::vector<double> k = k_net.init_parameters(seed + 1);
  theta.insert(theta.end(), k.begin(), k.end());
  return theta;
}

namespace {

bool finite(const loss::LossValues& l) { return std::isfinite(l.total); }

bool finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

TrainResult train(const loss::LossEvaluator& objective, std::vector<double> initial,
                  const Schedule& schedule, const TrainOptions& options) {
  schedule.validate();
  if (initial.size() != objective.parameter_count()) {
    throw std::invalid_argument("train: initial parameter vector has wrong length");
  }
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(clock::now() - start).count();
  };

  TrainResult result;
  std::vector<double>& theta = result.params;
  theta = std::move(initial);
  std::vector<double> last_good = theta;
  std::vector<double> grad(theta.size());
  std::size_t epoch = 0;

  auto record = [&](const loss::LossValues& l) {
    HistoryRow row{epoch, l, elapsed_ms()};
    result.history.push_back(row);
    if (options.on_epoch) options.on_epoch(row);
    if (options.checkpoint_every != 0 && epoch % options.checkpoint_every == 0 &&
        options.on_checkpoint) {
      options.on_checkpoint(theta, epoch);
    }
  };
  auto abort = [&](const std::string& why) {
    result.aborted = true;
    result.diagnostic = why + " at epoch " + std::to_string(epoch);
    theta = last_good;
    if (options.on_checkpoint) options.on_checkpoint(theta, epoch);
    result.wall_s = elapsed_ms() / 1000.0;
    return result;
  };

  optim::Adam adam(theta.size(), optim::AdamConfig{.lr = schedule.adam_lr});
  for (std::size_t i = 0; i < schedule.adam_epochs; ++i) {
    ++epoch;
    const loss::LossValues l = objective.evaluate(theta, grad);
    if (!finite(l) || !finite(grad)) return abort("non-finite loss or gradient during Adam");
    last_good = theta;
    record(l);
    adam.step(theta, grad);
  }

  if (schedule.lbfgs_epochs > 0) {
    optim::LbfgsConfig cfg;
    cfg.lr = schedule.lbfgs_lr;
    optim::Lbfgs lbfgs(theta.size(), cfg);
    // The strong Wolfe search always accepts its latest trial, so the
    // components of the accepted point are the last ones evaluated.
    loss::LossValues latest;
    const optim::Objective f = [&](std::span<const double> x, std::span<double> g) {
      latest = objective.evaluate(x, g);
      return latest.total;
    };
    loss::LossValues current = objective.evaluate(theta, grad);
    double loss_value = current.total;
    if (!std::isfinite(loss_value) || !finite(grad)) {
      return abort("non-finite loss or gradient entering L-BFGS");
    }
    last_good = theta;
    for (std::size_t i = 0; i < schedule.lbfgs_epochs; ++i) {
      ++epoch;
      const bool fresh = lbfgs.history().empty();
      const optim::LbfgsStep s = lbfgs.step(theta, loss_value, grad, f);
      ++result.lbfgs_iterations;
      if (!s.warning.empty()) {
        ++result.line_search_failures;
        if (options.on_warning) options.on_warning(s.warning + " (epoch " + std::to_string(epoch) + ")");
      }
      if (s.moved) current = latest;
      if (!finite(current)) return abort("non-finite loss during L-BFGS");
      last_good = theta;
      record(current);
      // Failing from a steepest-descent start means no further progress is
      // possible with this objective; further iterations would repeat it.
      if (!s.moved && fresh) break;
    }
  }
  result.wall_s = elapsed_ms() / 1000.0;
  return result;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path,
                       const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_history_csv: cannot open " + path.string());
  if (!header_comment.empty()) {
    std::istringstream lines(header_comment);
    for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
  }
  out << "epoch,loss_total,loss_pde,loss_u,loss_k,loss_bnd,wall_ms\n" << std::setprecision(17);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.loss.total << ',' << r.loss.pde << ',' << r.loss.u << ','
        << r.loss.k << ',' << r.loss.bnd << ',' << std::setprecision(6) << r.wall_ms
        << std::setprecision(17) << '\n';
  }
}

}  // namespace unbounded::train
