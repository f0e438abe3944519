#include <cmath>
#include <limits>

#include <doctest.h>

#include "unbounded/optim.hpp"

using namespace unbounded::optim;

namespace {

// 0.5 x^T A x - b^T x with A = diag(1..5) plus a coupling term.
double quad(std::span<const double> x, std::span<double> g) {
  const double b[5] = {1.0, -2.0, 0.5, 3.0, -1.0};
  double f = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const double ax = static_cast<double>(i + 1) * x[i] + 0.3 * (i > 0 ? x[i - 1] : 0.0) + 0.3 * (i < 4 ? x[i + 1] : 0.0);
    f += 0.5 * x[i] * ax - b[i] * x[i];
    if (!g.empty()) g[i] = ax - b[i];
  }
  return f;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("first Adam step moves each coordinate by about lr against its gradient") {
  Adam adam(3, AdamConfig{.lr = 1e-3});
  std::vector<double> p{1.0, -1.0, 0.0};
  const std::vector<double> g{0.5, -20.0, 0.0};
  adam.step(p, g);
  CHECK(adam.t() == 1);
  // m_hat = g and v_hat = g^2 after bias correction.
  CHECK(std::abs(p[0] - (1.0 - 1e-3 * 0.5 / (0.5 + 1e-8))) <= 1e-12);
  CHECK(std::abs(p[1] - (-1.0 + 1e-3 * 20.0 / (20.0 + 1e-8))) <= 1e-12);
  CHECK(p[2] == 0.0);
  CHECK(adam.m()[0] == doctest::Approx(0.05));
  CHECK(adam.v()[1] == doctest::Approx(0.4));
}

TEST_CASE("Adam leaves parameters alone under a zero gradient") {
  Adam adam(4, AdamConfig{});
  std::vector<double> p{1.0, 2.0, 3.0, 4.0};
  const auto before = p;
  for (int i = 0; i < 10; ++i) adam.step(p, std::vector<double>(4, 0.0));
  CHECK(p == before);
  CHECK(adam.t() == 10);
}

TEST_CASE("Adam is nearly invariant to scaling the loss") {
  auto run = [](double c) {
    Adam adam(5, AdamConfig{.lr = 1e-2});
    std::vector<double> x(5, 0.0);
    std::vector<double> g(5);
    for (int i = 0; i < 200; ++i) {
      quad(x, g);
      for (double& v : g) v *= c;
      adam.step(x, g);
    }
    return x;
  };
  const auto a = run(1.0);
  const auto b = run(1000.0);
  for (std::size_t i = 0; i < 5; ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-5));
}

TEST_CASE("L-BFGS solves a 5-D quadratic in at most 20 iterations") {
  Lbfgs opt(5, LbfgsConfig{.lr = 1.0});
  std::vector<double> x(5, 0.0);
  std::vector<double> g(5);
  double f = quad(x, g);
  int iters = 0;
  while (norm(g) > 1e-8 && iters < 20) {
    const auto s = opt.step(x, f, g, quad);
    REQUIRE(s.warning.empty());
    ++iters;
  }
  CHECK(norm(g) <= 1e-8);
  CHECK(iters <= 20);
  for (const auto& p : opt.history()) {
    double sy = 0.0;
    for (std::size_t i = 0; i < 5; ++i) sy += p.s[i] * p.y[i];
    CHECK(sy > Lbfgs::kMinCurvature);
    CHECK(p.rho == doctest::Approx(1.0 / sy));
  }
  CHECK(opt.history().size() <= 10);
}

TEST_CASE("history never exceeds its capacity") {
  Lbfgs opt(5, LbfgsConfig{.history = 2, .lr = 1.0});
  std::vector<double> x(5, 0.0);
  std::vector<double> g(5);
  double f = quad(x, g);
  for (int i = 0; i < 6; ++i) {
    opt.step(x, f, g, quad);
    CHECK(opt.history().size() <= 2);
  }
}

TEST_CASE("exact line search minimises half the squared norm in one step") {
  auto sq = [](std::span<const double> x, std::span<double> g) {
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      f += 0.5 * x[i] * x[i];
      if (!g.empty()) g[i] = x[i];
    }
    return f;
  };
  Lbfgs opt(3, LbfgsConfig{.lr = 0.3, .line_search = LineSearch::exact});
  std::vector<double> x{1.0, -2.0, 0.5};
  std::vector<double> g(3);
  double f = sq(x, g);
  const auto s = opt.step(x, f, g, sq);
  CHECK(s.moved);
  CHECK(s.step_length == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(norm(x) <= 1e-8);
}

TEST_CASE("empty history gives steepest descent") {
  Lbfgs opt(3, LbfgsConfig{});
  const std::vector<double> g{1.0, -2.0, 3.0};
  CHECK(opt.direction(g) == std::vector<double>{-1.0, 2.0, -3.0});
}

TEST_CASE("a line search that cannot decrease restores state and warns") {
  Lbfgs opt(2, LbfgsConfig{.lr = 1.0});
  // Gradient claims descent, but every move away from the origin is NaN.
  auto bad = [](std::span<const double> x, std::span<double> g) {
    if (x[0] == 1.0 && x[1] == 1.0) {
      if (!g.empty()) g[0] = g[1] = 1.0;
      return 0.0;
    }
    if (!g.empty()) g[0] = g[1] = std::numeric_limits<double>::quiet_NaN();
    return std::numeric_limits<double>::quiet_NaN();
  };
  std::vector<double> x{1.0, 1.0};
  std::vector<double> g{1.0, 1.0};
  double f = 0.0;
  const auto s = opt.step(x, f, g, bad);
  CHECK_FALSE(s.moved);
  CHECK_FALSE(s.warning.empty());
  CHECK(x == std::vector<double>{1.0, 1.0});
  CHECK(g == std::vector<double>{1.0, 1.0});
  CHECK(f == 0.0);
  CHECK(opt.history().empty());

  double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(opt.step(x, nan, g, bad), NonFiniteError);
}

TEST_CASE("scaling the objective leaves the exact-search trajectory unchanged") {
  auto run = [](double c) {
    auto f = [c](std::span<const double> x, std::span<double> g) {
      const double t = x[0];
      if (!g.empty()) g[0] = c * (2.0 * (t - 1.0) + 0.3 * std::cos(t) + 0.4 * t * t * t);
      return c * ((t - 1.0) * (t - 1.0) + 0.3 * std::sin(t) + 0.1 * t * t * t * t);
    };
    Lbfgs opt(1, LbfgsConfig{.lr = 0.7, .line_search = LineSearch::exact});
    std::vector<double> x{-2.0};
    std::vector<double> g(1);
    double loss = f(x, g);
    std::vector<double> path;
    for (int i = 0; i < 4; ++i) {
      opt.step(x, loss, g, f);
      path.push_back(x[0]);
    }
    return path;
  };
  const auto a = run(1.0);
  const auto b = run(250.0);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-10));
}
