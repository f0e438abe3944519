#include <cmath>
#include <functional>

#include <doctest.h>

#include "oracles.hpp"
#include "unbounded/problems.hpp"

using namespace unbounded::problems;

namespace {

// Fourth-order central stencils; the second-order ones leave a truncation
// error of order h^2 beta^4 that is too coarse at beta = 10.
double d1(const std::function<double(double)>& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

double d2(const std::function<double(double)>& f, double x, double h) {
  return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h);
}

// div(k grad u) by finite differences of the closed-form fields (k depends
// on y only).
double fd_source(const ProblemSpec& p, double x, double y) {
  const double h = 1e-3;
  auto ux = [&](double s) { return u_exact(p, s, y); };
  auto uy = [&](double s) { return u_exact(p, x, s); };
  auto k = [&](double s) { return k_exact(p, s); };
  return d1(k, y, h) * d1(uy, y, h) + k_exact(p, y) * (d2(ux, x, h) + d2(uy, y, h));
}

}  // namespace

TEST_CASE("default problem parameters") {
  const auto inf = ProblemSpec::infinite();
  CHECK(inf.alpha == 0.5);
  CHECK(inf.beta == 10.0);
  CHECK(inf.epsilon == 1.0);
  CHECK(inf.shift == 0.0);
  CHECK(inf.eval_box.y_lo == -3.0);
  const auto semi = ProblemSpec::semi_infinite();
  CHECK(semi.epsilon == 0.75);
  CHECK(semi.shift == 1.5);
  CHECK(semi.eval_box.y_lo == 0.0);
  CHECK(semi.eval_box.y_hi == 3.0);
  ProblemSpec bad = inf;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(parse_domain(domain_name(DomainKind::semi_infinite)) == DomainKind::semi_infinite);
  CHECK_THROWS(parse_domain("annulus"));
}

TEST_CASE("frozen field and source values") {
  const auto inf = ProblemSpec::infinite();
  CHECK(u_exact(inf, 0.0, 0.0) == 1.0);
  CHECK(k_exact(inf, 0.0) == 0.0);
  CHECK(u_exact(inf, 0.3, 0.7) == doctest::Approx(0.56411759044044385).epsilon(1e-14));
  CHECK(k_exact(inf, 0.7) == doctest::Approx(0.33637554433633232).epsilon(1e-14));
  CHECK(source_f(inf, 0.3, 0.7) == doctest::Approx(-19.284899914829939).epsilon(1e-12));

  const auto semi = ProblemSpec::semi_infinite();
  CHECK(u_exact(semi, -0.4, 1.2) == doctest::Approx(-0.29370101106447671).epsilon(1e-14));
  CHECK(k_exact(semi, 1.2) == doctest::Approx(-0.19737532022490401).epsilon(1e-14));
  CHECK(source_f(semi, -0.4, 1.2) == doctest::Approx(-5.0573684044930713).epsilon(1e-12));
  CHECK(boundary_trace(semi, 0.0) == 1.0);
  CHECK(boundary_trace(semi, 0.8) == doctest::Approx(u_exact(semi, 0.8, 0.0)).epsilon(1e-15));
  CHECK_THROWS(boundary_trace(inf, 0.0));
}

TEST_CASE("closed-form source matches finite differences of the fields") {
  for (const auto& p : {ProblemSpec::infinite(), ProblemSpec::semi_infinite()}) {
    const double y_lo = p.kind == DomainKind::infinite ? -3.0 : 0.0;
    const auto xs = oracle::uniform(200, -3.0, 3.0, 1);
    const auto ys = oracle::uniform(200, y_lo, 3.0, 2);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CHECK(oracle::rel_err(source_f(p, xs[i], ys[i]), fd_source(p, xs[i], ys[i]), 1.0) <= 1e-5);
    }
  }
}

TEST_CASE("exact jets agree with the scalar fields and satisfy the PDE") {
  for (const auto& p : {ProblemSpec::infinite(), ProblemSpec::semi_infinite()}) {
    for (double x : oracle::uniform(100, -4.0, 4.0, 3)) {
      const double y = 0.3 * x + 1.1;
      const auto u = u_jet_exact(p, x, y);
      const auto k = k_jet_exact(p, x, y);
      CHECK(u.v == u_exact(p, x, y));
      CHECK(k.v == k_exact(p, y));
      CHECK(k.dx == 0.0);
      const double h = 1e-5;
      CHECK(oracle::rel_err(u.dx, (u_exact(p, x + h, y) - u_exact(p, x - h, y)) / (2 * h), 1e-6) <= 1e-6);
      CHECK(oracle::rel_err(k.dy, (k_exact(p, y + h) - k_exact(p, y - h)) / (2 * h), 1e-6) <= 1e-6);
      const double r = k.dx * u.dx + k.dy * u.dy + k.v * (u.dxx + u.dyy) - source_f(p, x, y);
      CHECK(std::abs(r) <= 1e-12 * std::max(1.0, std::abs(source_f(p, x, y))));
    }
  }
}

TEST_CASE("symmetries of the manufactured solutions") {
  const auto inf = ProblemSpec::infinite();
  const auto semi = ProblemSpec::semi_infinite();
  for (double x : oracle::uniform(100, -3.0, 3.0, 4)) {
    const double y = std::fmod(std::abs(7.3 * x), 3.0);
    CHECK(u_exact(inf, -x, y) == doctest::Approx(u_exact(inf, x, y)).epsilon(1e-14));
    CHECK(u_exact(inf, x, -y) == doctest::Approx(u_exact(inf, x, y)).epsilon(1e-14));
    CHECK(k_exact(inf, -y) == doctest::Approx(-k_exact(inf, y)).epsilon(1e-13));
    CHECK(source_f(inf, -x, y) == doctest::Approx(source_f(inf, x, y)).epsilon(1e-12));
    CHECK(source_f(inf, x, -y) == doctest::Approx(-source_f(inf, x, y)).epsilon(1e-12));
    CHECK(u_exact(semi, -x, y) == doctest::Approx(u_exact(semi, x, y)).epsilon(1e-14));
    CHECK(source_f(semi, -x, y) == doctest::Approx(source_f(semi, x, y)).epsilon(1e-12));
  }
}

TEST_CASE("k is a monotone switch between -1 and 1") {
  for (const auto& p : {ProblemSpec::infinite(), ProblemSpec::semi_infinite()}) {
    double prev = -2.0;
    for (double y = -20.0; y <= 20.0; y += 0.01) {
      const double k = k_exact(p, y);
      CHECK(k > prev);
      CHECK(std::abs(k) < 1.0);
      prev = k;
    }
    CHECK(k_exact(p, p.shift) == doctest::Approx(0.0));
    CHECK(k_exact(p, 40.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(k_exact(p, -40.0) == doctest::Approx(-1.0).epsilon(1e-12));
  }
}

TEST_CASE("u and f decay away from the origin") {
  for (const auto& p : {ProblemSpec::infinite(), ProblemSpec::semi_infinite()}) {
    for (double r : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      for (double t : oracle::uniform(20, 0.0, 3.14159, 5)) {
        const double x = r * std::cos(t);
        const double y = r * std::sin(t);
        CHECK(std::abs(u_exact(p, x, y)) <= std::exp(-p.alpha * r * r) + 1e-15);
      }
    }
    CHECK(std::abs(source_f(p, 6.0, 6.0)) < 1e-10);
  }
}
