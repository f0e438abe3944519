#include "unbounded/problems.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace unbounded::problems {

std::string_view domain_name(DomainKind kind) {
  return kind == DomainKind::infinite ? "infinite" : "semi-infinite";
}

DomainKind parse_domain(std::string_view name) {
  if (name == "infinite") return DomainKind::infinite;
  if (name == "semi-infinite" || name == "semi_infinite") return DomainKind::semi_infinite;
  throw std::invalid_argument("unknown problem: " + std::string(name));
}

ProblemSpec ProblemSpec::infinite() { return ProblemSpec{}; }

ProblemSpec ProblemSpec::semi_infinite() {
  ProblemSpec s;
  s.kind = DomainKind::semi_infinite;
  s.epsilon = 0.75;
  s.shift = 1.5;
  s.eval_box = {-3.0, 3.0, 0.0, 3.0};
  return s;
}

void ProblemSpec::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("ProblemSpec: epsilon must be positive");
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(shift)) {
    throw std::invalid_argument("ProblemSpec: parameters must be finite");
  }
  if (!(eval_box.x_lo < eval_box.x_hi) || !(eval_box.y_lo < eval_box.y_hi)) {
    throw std::invalid_argument("ProblemSpec: evaluation box is empty");
  }
}

namespace {

struct UDerivs {
  double v, x, y, xx, yy;
};

// u = g(x, y) * cos(beta * s) with g = exp(-alpha (x^2 + y^2)); s is the
// oscillating coordinate. Derivatives along s and along the other axis.
UDerivs u_derivs(const ProblemSpec& p, double x, double y) {
  const double a = p.alpha;
  const double b = p.beta;
  const double g = std::exp(-a * (x * x + y * y));
  const bool along_y = p.kind == DomainKind::infinite;
  const double s = along_y ? y : x;
  const double t = along_y ? x : y;
  const double c = std::cos(b * s);
  const double sn = std::sin(b * s);
  const double u = g * c;
  const double u_s = g * (-2.0 * a * s * c - b * sn);
  const double u_ss = g * ((4.0 * a * a * s * s - 2.0 * a - b * b) * c + 4.0 * a * b * s * sn);
  const double u_t = -2.0 * a * t * u;
  const double u_tt = (4.0 * a * a * t * t - 2.0 * a) * u;
  if (along_y) return {u, u_t, u_s, u_tt, u_ss};
  return {u, u_s, u_t, u_ss, u_tt};
}

}  // namespace

double u_exact(const ProblemSpec& spec, double x, double y) {
  const double s = spec.kind == DomainKind::infinite ? y : x;
  return std::exp(-spec.alpha * (x * x + y * y)) * std::cos(spec.beta * s);
}

double k_exact(const ProblemSpec& spec, double y) {
  return -1.0 + 2.0 / (1.0 + std::exp(-(y - spec.shift) / spec.epsilon));
}

namespace {

// dk/dy = (2/eps) sigma (1 - sigma) with sigma the logistic factor.
double k_prime(const ProblemSpec& spec, double y) {
  const double sig = 1.0 / (1.0 + std::exp(-(y - spec.shift) / spec.epsilon));
  return 2.0 / spec.epsilon * sig * (1.0 - sig);
}

double k_second(const ProblemSpec& spec, double y) {
  const double sig = 1.0 / (1.0 + std::exp(-(y - spec.shift) / spec.epsilon));
  return 2.0 / (spec.epsilon * spec.epsilon) * sig * (1.0 - sig) * (1.0 - 2.0 * sig);
}

}  // namespace

double source_f(const ProblemSpec& spec, double x, double y) {
  const UDerivs u = u_derivs(spec, x, y);
  // k depends on y only, so k_x = 0.
  return k_prime(spec, y) * u.y + k_exact(spec, y) * (u.xx + u.yy);
}

double boundary_trace(const ProblemSpec& spec, double x) {
  if (spec.kind != DomainKind::semi_infinite) {
    throw std::logic_error("boundary_trace: the infinite problem has no boundary");
  }
  return std::exp(-spec.alpha * x * x) * std::cos(spec.beta * x);
}

autodiff::Jet2<double> u_jet_exact(const ProblemSpec& spec, double x, double y) {
  const UDerivs u = u_derivs(spec, x, y);
  return {u.v, u.x, u.y, u.xx, u.yy};
}

autodiff::Jet2<double> k_jet_exact(const ProblemSpec& spec, double, double y) {
  return {k_exact(spec, y), 0.0, k_prime(spec, y), 0.0, k_second(spec, y)};
}

}  // namespace unbounded::problems
