#include "unbounded/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace unbounded::optim {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

Adam::Adam(std::size_t n, AdamConfig config) : config_(config), m_(n, 0.0), v_(n, 0.0) {
  if (!(config.lr > 0.0)) throw std::invalid_argument("Adam: learning rate must be positive");
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("Adam::step: size mismatch");
  }
  if (!all_finite(grad)) throw NonFiniteError("Adam::step: gradient is not finite");
  ++t_;
  const auto& c = config_;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = c.beta1 * m_[i] + (1.0 - c.beta1) * grad[i];
    v_[i] = c.beta2 * v_[i] + (1.0 - c.beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

Lbfgs::Lbfgs(std::size_t n, LbfgsConfig config) : config_(config), n_(n) {
  if (config.history == 0) throw std::invalid_argument("Lbfgs: history must be positive");
  if (!(config.lr > 0.0)) throw std::invalid_argument("Lbfgs: learning rate must be positive");
  if (!(0.0 < config.c1 && config.c1 < config.c2 && config.c2 < 1.0)) {
    throw std::invalid_argument("Lbfgs: need 0 < c1 < c2 < 1");
  }
  if (config.max_ls <= 0) throw std::invalid_argument("Lbfgs: max_ls must be positive");
}

std::vector<double> Lbfgs::direction(std::span<const double> grad) const {
  std::vector<double> q(grad.begin(), grad.end());
  if (history_.empty()) {
    for (double& v : q) v = -v;
    return q;
  }
  std::vector<double> alpha(history_.size());
  for (std::size_t j = history_.size(); j-- > 0;) {
    const auto& p = history_[j];
    alpha[j] = p.rho * dot(p.s, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[j] * p.y[i];
  }
  const auto& last = history_.back();
  const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
  for (double& v : q) v *= gamma;
  for (std::size_t j = 0; j < history_.size(); ++j) {
    const auto& p = history_[j];
    const double beta = p.rho * dot(p.y, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[j] - beta) * p.s[i];
  }
  for (double& v : q) v = -v;
  return q;
}

namespace {

struct Trial {
  double a = 0.0;
  double f = 0.0;
  double dphi = 0.0;
  std::vector<double> g;
  bool finite() const { return std::isfinite(f) && std::isfinite(dphi); }
};

// Evaluates phi(a) = f(x0 + a d) and its slope, counting evaluations.
class Line {
 public:
  Line(std::span<const double> x0, const std::vector<double>& d, const Objective& f)
      : x0_(x0), d_(d), f_(f), x_(x0.size()) {}

  Trial operator()(double a) {
    ++evaluations;
    for (std::size_t i = 0; i < x_.size(); ++i) x_[i] = x0_[i] + a * d_[i];
    Trial t;
    t.a = a;
    t.g.assign(x_.size(), 0.0);
    t.f = f_(x_, t.g);
    t.dphi = all_finite(t.g) ? dot(t.g, d_) : std::numeric_limits<double>::quiet_NaN();
    return t;
  }

  int evaluations = 0;

 private:
  std::span<const double> x0_;
  const std::vector<double>& d_;
  const Objective& f_;
  std::vector<double> x_;
};

// Minimiser of the cubic through (a, f, dphi) at both ends, kept inside the
// middle 80% of the bracket; bisection when the cubic is unusable.
double interpolate(const Trial& lo, const Trial& hi) {
  const double mid = 0.5 * (lo.a + hi.a);
  if (!lo.finite() || !hi.finite()) return mid;
  const double d1 = lo.dphi + hi.dphi - 3.0 * (lo.f - hi.f) / (lo.a - hi.a);
  const double disc = d1 * d1 - lo.dphi * hi.dphi;
  if (disc < 0.0) return mid;
  const double d2 = std::copysign(std::sqrt(disc), hi.a - lo.a);
  const double denom = hi.dphi - lo.dphi + 2.0 * d2;
  if (denom == 0.0) return mid;
  const double a = hi.a - (hi.a - lo.a) * (hi.dphi + d2 - d1) / denom;
  const double a_min = std::min(lo.a, hi.a);
  const double a_max = std::max(lo.a, hi.a);
  const double w = a_max - a_min;
  if (!std::isfinite(a)) return mid;
  return std::clamp(a, a_min + 0.1 * w, a_max - 0.1 * w);
}

struct SearchResult {
  bool ok = false;
  Trial accepted;
};

SearchResult strong_wolfe(Line& phi, double f0, double dphi0, double a_init,
                          const LbfgsConfig& c) {
  const auto armijo = [&](const Trial& t) { return t.f <= f0 + c.c1 * t.a * dphi0; };
  const auto curvature = [&](const Trial& t) { return std::abs(t.dphi) <= -c.c2 * dphi0; };

  auto zoom = [&](Trial lo, Trial hi) -> SearchResult {
    while (phi.evaluations < c.max_ls) {
      if (std::abs(hi.a - lo.a) <= 1e-16 * std::max(1.0, std::abs(lo.a))) break;
      Trial t = phi(interpolate(lo, hi));
      if (!t.finite() || !armijo(t) || t.f >= lo.f) {
        hi = std::move(t);
        continue;
      }
      if (curvature(t)) return {true, std::move(t)};
      if (t.dphi * (hi.a - lo.a) >= 0.0) hi = lo;
      lo = std::move(t);
    }
    return {};
  };

  Trial prev;
  prev.a = 0.0;
  prev.f = f0;
  prev.dphi = dphi0;
  double a = a_init;
  bool first = true;
  while (phi.evaluations < c.max_ls) {
    Trial t = phi(a);
    if (!t.finite() || !armijo(t) || (!first && t.f >= prev.f)) return zoom(std::move(prev), std::move(t));
    if (curvature(t)) return {true, std::move(t)};
    if (t.dphi >= 0.0) return zoom(std::move(t), std::move(prev));
    prev = std::move(t);
    a *= 2.0;
    first = false;
  }
  return {};
}

// Root of phi' by doubling then bisection. Only meant for small problems
// where the cost of many evaluations does not matter.
SearchResult exact(Line& phi, double dphi0, double a_init) {
  constexpr int kMaxEvaluations = 400;
  Trial lo;
  lo.a = 0.0;
  lo.dphi = dphi0;
  Trial hi = phi(a_init);
  while (hi.finite() && hi.dphi < 0.0 && phi.evaluations < kMaxEvaluations) {
    lo = std::move(hi);
    hi = phi(2.0 * lo.a);
  }
  if (hi.finite() && hi.dphi == 0.0) return {true, std::move(hi)};
  while (phi.evaluations < kMaxEvaluations) {
    const double mid = 0.5 * (lo.a + hi.a);
    if (mid <= lo.a || mid >= hi.a) break;
    Trial t = phi(mid);
    if (t.finite() && t.dphi == 0.0) return {true, std::move(t)};
    if (t.finite() && t.dphi < 0.0) {
      lo = std::move(t);
    } else {
      hi = std::move(t);
    }
  }
  if (lo.a == 0.0) return {};
  if (lo.g.empty()) lo = phi(lo.a);
  return {true, std::move(lo)};
}

}  // namespace

LbfgsStep Lbfgs::step(std::span<double> params, double& loss, std::span<double> grad,
                      const Objective& objective) {
  if (params.size() != n_ || grad.size() != n_) throw std::invalid_argument("Lbfgs::step: size mismatch");
  if (!std::isfinite(loss) || !all_finite(grad)) {
    throw NonFiniteError("Lbfgs::step: loss or gradient is not finite");
  }
  LbfgsStep out;
  std::vector<double> d = direction(grad);
  double dphi0 = dot(grad, d);
  if (!(dphi0 < 0.0)) {
    history_.clear();
    d = direction(grad);
    dphi0 = dot(grad, d);
  }
  if (!(dphi0 < 0.0)) return out;  // zero gradient: already stationary

  double a_init = config_.lr;
  if (history_.empty() && config_.scale_first_step) {
    double g1 = 0.0;
    for (double g : grad) g1 += std::abs(g);
    a_init *= std::min(1.0, 1.0 / g1);
  }

  Line phi(params, d, objective);
  SearchResult r = config_.line_search == LineSearch::exact
                       ? exact(phi, dphi0, a_init)
                       : strong_wolfe(phi, loss, dphi0, a_init, config_);
  out.evaluations = phi.evaluations;
  if (!r.ok || !(r.accepted.f <= loss)) {
    history_.clear();
    out.warning = "L-BFGS line search failed after " + std::to_string(phi.evaluations) +
                  " evaluations; no step taken";
    return out;
  }

  CurvaturePair pair;
  pair.s.resize(n_);
  pair.y.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    pair.s[i] = r.accepted.a * d[i];
    pair.y[i] = r.accepted.g[i] - grad[i];
    params[i] += pair.s[i];
  }
  std::copy(r.accepted.g.begin(), r.accepted.g.end(), grad.begin());
  loss = r.accepted.f;
  const double sy = dot(pair.s, pair.y);
  if (sy > kMinCurvature) {
    pair.rho = 1.0 / sy;
    history_.push_back(std::move(pair));
    if (history_.size() > config_.history) history_.pop_front();
  }
  out.moved = true;
  out.step_length = r.accepted.a;
  return out;
}

}  // namespace unbounded::optim
