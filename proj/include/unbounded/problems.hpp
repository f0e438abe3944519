#pragma once

#include <string_view>

#include "unbounded/autodiff/jet.hpp"
#include "unbounded/sampling.hpp"

namespace unbounded::problems {

enum class DomainKind { infinite, semi_infinite };

std::string_view domain_name(DomainKind kind);
DomainKind parse_domain(std::string_view name);

/// Manufactured Poisson problem div(k grad u) = f with
///   u = exp(-alpha (x^2 + y^2)) cos(beta * s), s = y (infinite) or x (semi-infinite)
///   k = -1 + 2 / (1 + exp(-(y - shift) / epsilon))
/// and f assembled in closed form from both.
struct ProblemSpec {
  DomainKind kind = DomainKind::infinite;
  double alpha = 0.5;
  double beta = 10.0;
  double epsilon = 1.0;
  double shift = 0.0;
  sampling::Box eval_box{-3.0, 3.0, -3.0, 3.0};

  static ProblemSpec infinite();
  static ProblemSpec semi_infinite();

  void validate() const;
};

double u_exact(const ProblemSpec& spec, double x, double y);
double k_exact(const ProblemSpec& spec, double y);
double source_f(const ProblemSpec& spec, double x, double y);
/// Dirichlet data on y = 0; only defined for semi-infinite problems.
double boundary_trace(const ProblemSpec& spec, double x);

/// Exact fields as jets with analytic derivatives, for substituting the
/// truth into residual code in place of the networks.
autodiff::Jet2<double> u_jet_exact(const ProblemSpec& spec, double x, double y);
autodiff::Jet2<double> k_jet_exact(const ProblemSpec& spec, double x, double y);

}  // namespace unbounded::problems
