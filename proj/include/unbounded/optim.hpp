#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace unbounded::optim {

/// Raised when a loss or gradient stops being finite.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::size_t n, AdamConfig config);

  /// One bias-corrected update of `params` in place.
  void step(std::span<double> params, std::span<const double> grad);

  std::size_t t() const noexcept { return t_; }
  const std::vector<double>& m() const noexcept { return m_; }
  const std::vector<double>& v() const noexcept { return v_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

/// Loss at theta; writes the gradient into the second argument.
using Objective = std::function<double(std::span<const double>, std::span<double>)>;

enum class LineSearch { strong_wolfe, exact };

struct LbfgsConfig {
  std::size_t history = 10;
  /// Initial trial step length of every line search.
  double lr = 0.5;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_ls = 25;
  /// With an empty history, shrink the first trial step to lr * min(1, 1/|g|_1).
  bool scale_first_step = true;
  LineSearch line_search = LineSearch::strong_wolfe;
};

struct CurvaturePair {
  std::vector<double> s;
  std::vector<double> y;
  double rho = 0.0;  // 1 / (s.y)
};

struct LbfgsStep {
  bool moved = false;
  int evaluations = 0;
  double step_length = 0.0;
  std::string warning;
};

class Lbfgs {
 public:
  static constexpr double kMinCurvature = 1e-10;

  Lbfgs(std::size_t n, LbfgsConfig config);

  /// Search direction from the two-loop recursion; -grad when history is empty.
  std::vector<double> direction(std::span<const double> grad) const;

  /// One outer iteration. On entry `loss`/`grad` hold the objective at
  /// `params`; on exit they hold it at the new point. A failed line search
  /// restores the entry state, clears the history and reports a warning.
  LbfgsStep step(std::span<double> params, double& loss, std::span<double> grad,
                 const Objective& objective);

  const std::deque<CurvaturePair>& history() const noexcept { return history_; }
  const LbfgsConfig& config() const noexcept { return config_; }
  void clear_history() { history_.clear(); }

 private:
  LbfgsConfig config_;
  std::size_t n_;
  std::deque<CurvaturePair> history_;
};

}  // namespace unbounded::optim
