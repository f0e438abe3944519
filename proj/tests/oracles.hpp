#pragma once

// Finite-difference oracles and small helpers shared by the unit tests and
// the acceptance runner.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace oracle {

/// Central difference of f along coordinate i of theta.
inline double central(const std::function<double(std::span<const double>)>& f,
                      std::vector<double> theta, std::size_t i, double h) {
  const double t = theta[i];
  theta[i] = t + h;
  const double fp = f(theta);
  theta[i] = t - h;
  const double fm = f(theta);
  return (fp - fm) / (2.0 * h);
}

/// Fourth-order central difference along coordinate i. Loss values of order
/// 10^2 leave roundoff of about eps * |f| / h in any difference quotient, so
/// a higher-order stencil with a moderate h is the accurate choice.
inline double central4(const std::function<double(std::span<const double>)>& f,
                       std::vector<double> theta, std::size_t i, double h) {
  const double t = theta[i];
  auto at = [&](double d) {
    theta[i] = t + d;
    return f(theta);
  };
  return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
}

/// Second central difference of a one-dimensional function.
inline double second(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

/// |a - b| / max(|a|, |b|, floor). The floor keeps coordinates whose true
/// value is at roundoff level from dominating a relative comparison.
inline double rel_err(double a, double b, double floor = 0.0) {
  const double d = std::max({std::abs(a), std::abs(b), floor});
  return d == 0.0 ? 0.0 : std::abs(a - b) / d;
}

/// Smallest relative error of `g` against several difference stencils.
/// PDE losses on cubic-spline networks depend on phi'', which is only
/// piecewise linear in the parameters, so a wide stencil can straddle a kink
/// while a narrow one drowns in roundoff. Each stencil is a valid estimate
/// wherever the loss is smooth across it.
inline double fd_rel_err(const std::function<double(std::span<const double>)>& f,
                         const std::vector<double>& theta, std::size_t i, double g, double floor) {
  // One-sided second-order stencils catch kinks just to one side.
  auto one_sided = [&](double h) {
    auto t = theta;
    auto at = [&](double d) {
      t[i] = theta[i] + d;
      return f(t);
    };
    return (-3.0 * at(0.0) + 4.0 * at(h) - at(2.0 * h)) / (2.0 * h);
  };
  double best = rel_err(g, central(f, theta, i, 1e-5), floor);
  for (double h : {1e-2, 3e-3, 1e-3, 3e-4, 1e-4}) best = std::min(best, rel_err(g, central4(f, theta, i, h), floor));
  for (double h : {1e-4, -1e-4}) best = std::min(best, rel_err(g, one_sided(h), floor));
  return best;
}

inline std::vector<double> uniform(std::size_t n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

/// Two-sided Kolmogorov-Smirnov statistic of a sample against a CDF.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

/// Asymptotic 1% critical value of the KS statistic.
inline double ks_critical_1pct(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

}  // namespace oracle
