#include <cmath>

#include <doctest.h>

#include "oracles.hpp"
#include "unbounded/autodiff/jet.hpp"
#include "unbounded/networks/bspline.hpp"
#include "unbounded/networks/network.hpp"

using namespace unbounded::networks;
using unbounded::autodiff::Jet2;
using unbounded::autodiff::JetBatch;

namespace {

// Textbook Cox-de Boor recursion, written independently of the library:
// plain recursion on (i, p) with the 0/0 := 0 convention.
double de_boor(const std::vector<double>& t, int i, int p, double x) {
  const auto u = static_cast<std::size_t>(i);
  if (p == 0) return (t[u] <= x && x < t[u + 1]) ? 1.0 : 0.0;
  const auto q = static_cast<std::size_t>(p);
  double left = 0.0;
  double right = 0.0;
  if (t[u + q] != t[u]) left = (x - t[u]) / (t[u + q] - t[u]) * de_boor(t, i, p - 1, x);
  if (t[u + q + 1] != t[u + 1]) {
    right = (t[u + q + 1] - x) / (t[u + q + 1] - t[u + 1]) * de_boor(t, i + 1, p - 1, x);
  }
  return left + right;
}

std::vector<double> perturbed(std::vector<double> theta, double scale) {
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += scale * std::sin(1.7 * static_cast<double>(i) + 0.3);
  return theta;
}

template <class F>
void check_jet_against_fd(F f, const Jet2<double>& j, double x0, double y0) {
  const double h1 = 1e-4;
  const double fx = (f(x0 + h1, y0) - f(x0 - h1, y0)) / (2 * h1);
  const double fy = (f(x0, y0 + h1) - f(x0, y0 - h1)) / (2 * h1);
  const double fxx = oracle::second([&](double x) { return f(x, y0); }, x0, 1e-3);
  const double fyy = oracle::second([&](double y) { return f(x0, y); }, y0, 1e-3);
  CHECK(j.v == f(x0, y0));
  CHECK(oracle::rel_err(j.dx, fx, 1e-8) <= 1e-5);
  CHECK(oracle::rel_err(j.dy, fy, 1e-8) <= 1e-5);
  CHECK(oracle::rel_err(j.dxx, fxx, 1e-5) <= 1e-4);
  CHECK(oracle::rel_err(j.dyy, fyy, 1e-5) <= 1e-4);
}

}  // namespace

TEST_CASE("MLP parameter counts follow the layer formula") {
  CHECK(MlpConfig{4, 8}.parameter_count() == 249);
  CHECK(MlpConfig{16, 32}.parameter_count() == 15969);
  for (int l : {1, 2, 5}) {
    for (int w : {1, 3, 8}) {
      const MlpConfig c{l, w};
      const auto uw = static_cast<std::size_t>(w);
      CHECK(c.parameter_count() == 2 * uw + uw + static_cast<std::size_t>(l - 1) * (uw * uw + uw) + uw + 1);
      CHECK(mlp_init(c, 1).flatten().size() == c.parameter_count());
    }
  }
}

TEST_CASE("MLP init is deterministic, Glorot bounded, with zero biases") {
  const MlpConfig c{3, 8};
  const auto a = mlp_init(c, 42);
  CHECK(a.flatten() == mlp_init(c, 42).flatten());
  CHECK(a.flatten() != mlp_init(c, 43).flatten());
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    CHECK(a.biases[l].isZero(0.0));
    const double bound = std::sqrt(6.0 / static_cast<double>(a.weights[l].rows() + a.weights[l].cols()));
    CHECK(a.weights[l].cwiseAbs().maxCoeff() <= bound);
  }
  const auto flat = perturbed(a.flatten(), 0.1);
  CHECK(MlpParams::unflatten(c, flat).flatten() == flat);
}

TEST_CASE("MLP special cases") {
  const MlpConfig c{2, 3};
  std::vector<double> zero(c.parameter_count(), 0.0);
  zero.back() = 0.25;  // output bias
  const auto j = mlp_forward<double, Jet2<double>>(c, zero, Jet2<double>::seed_x(0.4), Jet2<double>::seed_y(-1.0));
  CHECK(j.v == 0.25);
  CHECK(j.dx == 0.0);
  CHECK(j.dy == 0.0);
  CHECK(j.dxx == 0.0);
  CHECK(j.dyy == 0.0);

  // One neuron: tanh(x), read out with weight 1.
  const MlpConfig one{1, 1};
  const std::vector<double> p{1.0, 0.0, 0.0, 1.0, 0.0};
  const auto t = mlp_forward<double, Jet2<double>>(one, p, Jet2<double>::seed_x(0.0), Jet2<double>::seed_y(0.0));
  CHECK(t.v == 0.0);
  CHECK(t.dx == 1.0);
  CHECK(t.dy == 0.0);
  CHECK(t.dxx == 0.0);
  CHECK(t.dyy == 0.0);
}

TEST_CASE("random (2,4) MLP jets match finite differences") {
  const MlpConfig c{2, 4};
  const auto theta = perturbed(mlp_init(c, 9).flatten(), 0.05);
  auto f = [&](double x, double y) { return mlp_forward<double, double>(c, theta, x, y); };
  for (auto [x0, y0] : {std::pair{0.1, 0.2}, std::pair{-1.3, 0.8}, std::pair{2.0, -2.5}}) {
    check_jet_against_fd(f, mlp_forward<double, Jet2<double>>(c, theta, Jet2<double>::seed_x(x0), Jet2<double>::seed_y(y0)), x0, y0);
  }
}

TEST_CASE("B-spline basis: degree 0 and the frozen cubic value") {
  const std::vector<double> k0{0.0, 1.0};
  CHECK(bspline_basis(k0, 0, 0.5) == std::vector<double>{1.0});

  const auto knots = uniform_knots(3, 3, -3.0, 3.0);
  REQUIRE(knots.size() == 10);
  CHECK(knots.front() == -9.0);
  CHECK(knots.back() == 9.0);
  const auto b = bspline_basis(knots, 3, 0.0);
  const std::vector<double> frozen{0.0, 1.0 / 48.0, 23.0 / 48.0, 23.0 / 48.0, 1.0 / 48.0, 0.0};
  REQUIRE(b.size() == frozen.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    CHECK(std::abs(b[i] - frozen[i]) <= 1e-12);
    CHECK(std::abs(b[i] - de_boor(knots, static_cast<int>(i), 3, 0.0)) <= 1e-12);
  }
  CHECK_THROWS_AS(bspline_basis(std::vector<double>{0.0, 1.0, 2.0}, 2, 0.5), std::invalid_argument);
}

TEST_CASE("B-spline basis matches the recursive oracle on uniform and clamped knots") {
  const std::vector<std::vector<double>> knot_sets{
      uniform_knots(3, 3, -3.0, 3.0),
      uniform_knots(5, 2, -1.0, 2.0),
      {0.0, 0.0, 0.0, 0.0, 0.5, 1.5, 2.0, 2.0, 2.0, 2.0},
      {0.0, 0.3, 0.3, 1.0, 1.4, 2.2, 3.0}};
  const std::vector<int> degrees{3, 2, 3, 2};
  for (std::size_t s = 0; s < knot_sets.size(); ++s) {
    const auto& t = knot_sets[s];
    for (double x : oracle::uniform(200, t.front(), t.back(), s + 1)) {
      const auto b = bspline_basis(t, degrees[s], x);
      for (std::size_t i = 0; i < b.size(); ++i) {
        CHECK(std::abs(b[i] - de_boor(t, static_cast<int>(i), degrees[s], x)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("B-spline partition of unity, nonnegativity and local support") {
  for (int degree : {1, 2, 3, 4}) {
    const auto t = uniform_knots(3, degree, -3.0, 3.0);
    for (double x : oracle::uniform(1000, -3.0, 3.0 - 1e-12, 17)) {
      const auto b = bspline_basis(t, degree, x);
      double sum = 0.0;
      int nonzero = 0;
      for (double v : b) {
        CHECK(v >= 0.0);
        sum += v;
        nonzero += v != 0.0;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      CHECK(nonzero <= degree + 1);
    }
    // Outside the knot span every value is zero.
    for (double v : bspline_basis(t, degree, t.back() + 0.1)) CHECK(v == 0.0);
    for (double v : bspline_basis(t, degree, t.front() - 0.1)) CHECK(v == 0.0);
  }
}

TEST_CASE("local derivative basis agrees with differentiated generic basis") {
  const auto t = uniform_knots(3, 3, -3.0, 3.0);
  for (double x : oracle::uniform(100, -8.9, 8.9, 4)) {
    const LocalBasis lb = bspline_local(t, 3, x, 2);
    const auto g = bspline_basis_generic<Jet2<double>>(t, 3, Jet2<double>::seed_x(x), x);
    REQUIRE(lb.inside);
    for (int r = 0; r <= 3; ++r) {
      const int i = lb.first + r;
      if (i < 0 || i >= static_cast<int>(g.size())) continue;
      const auto& gi = g[static_cast<std::size_t>(i)];
      CHECK(lb.values[static_cast<std::size_t>(r)] == doctest::Approx(gi.v).epsilon(1e-12));
      CHECK(lb.values[static_cast<std::size_t>(4 + r)] == doctest::Approx(gi.dx).epsilon(1e-12));
      CHECK(lb.values[static_cast<std::size_t>(8 + r)] == doctest::Approx(gi.dxx).epsilon(1e-11));
    }
  }
}

TEST_CASE("KAN edge special cases") {
  const KanConfig c{1, 1, 3, 3, -3.0, 3.0};
  const auto knots = c.knots();
  const std::size_t nb = c.basis_per_edge();
  REQUIRE(nb == 6);

  std::vector<double> silu_only(nb + 2, 0.0);
  silu_only[nb] = 1.0;
  for (double x : {-5.0, -0.3, 0.0, 1.1, 4.0}) {
    CHECK(kan_edge<double, double>(silu_only, knots, 3, x) == unbounded::autodiff::silu(x));
  }
  std::vector<double> ones(nb + 2, 1.0);
  ones[nb] = 0.0;
  for (double x : oracle::uniform(50, -3.0, 2.999, 2)) {
    CHECK(std::abs(kan_edge<double, double>(ones, knots, 3, x) - 1.0) <= 1e-12);
  }
}

TEST_CASE("random KAN edge matches finite differences") {
  const KanConfig c{1, 1, 3, 3, -3.0, 3.0};
  const auto knots = c.knots();
  const auto edge = perturbed(std::vector<double>(c.params_per_edge(), 0.3), 0.5);
  auto f = [&](double x) { return kan_edge<double, double>(edge, knots, 3, x); };
  for (double x0 : {-2.2, -0.4, 0.7, 2.5, 10.0}) {
    const auto j = kan_edge<double, Jet2<double>>(edge, knots, 3, Jet2<double>::seed_x(x0));
    CHECK(j.v == f(x0));
    CHECK(oracle::rel_err(j.dx, (f(x0 + 1e-4) - f(x0 - 1e-4)) / 2e-4, 1e-8) <= 1e-5);
    CHECK(oracle::rel_err(j.dxx, oracle::second(f, x0, 1e-3), 1e-5) <= 1e-4);
  }
}

TEST_CASE("cubic KAN edges are C2 across knots") {
  const KanConfig c{1, 1, 3, 3, -3.0, 3.0};
  const auto knots = c.knots();
  const auto edge = perturbed(std::vector<double>(c.params_per_edge(), 0.2), 0.8);
  for (std::size_t i = 1; i + 1 < knots.size(); ++i) {
    const double t = knots[i];
    const double d = 1e-9;
    const auto l = kan_edge<double, Jet2<double>>(edge, knots, 3, Jet2<double>::seed_x(t - d));
    const auto r = kan_edge<double, Jet2<double>>(edge, knots, 3, Jet2<double>::seed_x(t + d));
    const double scale = std::max({std::abs(l.dxx), std::abs(r.dxx), 1.0});
    CHECK(std::abs(l.dxx - r.dxx) / scale <= 1e-6);
    CHECK(std::abs(l.dx - r.dx) / scale <= 1e-6);
  }
}

TEST_CASE("KAN parameter counts, by formula and by enumeration") {
  const KanConfig c{3, 6, 3, 3, -3.0, 3.0};
  std::size_t edges = 0;
  for (auto [in, out] : c.layer_shapes()) edges += static_cast<std::size_t>(in * out);
  CHECK(edges == 2 * 6 + 2 * 36 + 6);
  CHECK(c.parameter_count() == edges * (3 + 3 + 2));
  CHECK(c.parameter_count() == 720);
  const auto p = kan_init(c, 3);
  std::size_t enumerated = 0;
  for (const auto& layer : p.layers) {
    for (const auto& e : layer) enumerated += e.coeffs.size() + 2;
  }
  CHECK(enumerated == c.parameter_count());
  const auto flat = perturbed(p.flatten(), 0.1);
  CHECK(KanParams::unflatten(c, flat).flatten() == flat);
  CHECK(kan_init(c, 3).flatten() == p.flatten());
}

TEST_CASE("KAN with all edges zero outputs zero") {
  const KanConfig c{1, 3, 3, 3, -3.0, 3.0};
  const std::vector<double> zero(c.parameter_count(), 0.0);
  CHECK(kan_forward<double, double>(c, zero, 0.3, -1.2) == 0.0);
}

TEST_CASE("random (2,4) KAN jets match finite differences") {
  const KanConfig c{2, 4, 3, 3, -3.0, 3.0};
  const auto theta = perturbed(kan_init(c, 21).flatten(), 0.05);
  auto f = [&](double x, double y) { return kan_forward<double, double>(c, theta, x, y); };
  for (auto [x0, y0] : {std::pair{0.15, 0.25}, std::pair{-1.3, 0.8}, std::pair{2.6, -2.1}}) {
    check_jet_against_fd(f, kan_forward<double, Jet2<double>>(c, theta, Jet2<double>::seed_x(x0), Jet2<double>::seed_y(y0)), x0, y0);
  }
}

TEST_CASE("plain evaluation equals the jet value bit for bit") {
  const Network nets[] = {Network(MlpConfig{3, 5}), Network(KanConfig{2, 3, 3, 3, -3.0, 3.0})};
  for (const auto& net : nets) {
    const auto theta = perturbed(net.init_parameters(8), 0.1);
    for (double x : oracle::uniform(20, -4.0, 4.0, 1)) {
      const double y = 0.5 * x - 0.3;
      const auto j = net.forward<double, Jet2<double>>(theta, Jet2<double>::seed_x(x), Jet2<double>::seed_y(y));
      CHECK(j.v == net.value(theta, x, y));
      const auto jt = net.forward<unbounded::autodiff::TapeScalar, unbounded::autodiff::TapeScalar>(
          std::vector<unbounded::autodiff::TapeScalar>(theta.begin(), theta.end()),
          unbounded::autodiff::TapeScalar(x), unbounded::autodiff::TapeScalar(y));
      CHECK(jt.value() == net.value(theta, x, y));
    }
  }
}

TEST_CASE("batched forward agrees with scalar jets for both families") {
  const Network nets[] = {Network(MlpConfig{3, 6}), Network(KanConfig{2, 4, 3, 3, -3.0, 3.0})};
  const auto xs = oracle::uniform(40, -4.0, 4.0, 5);
  const auto ys = oracle::uniform(40, -4.0, 4.0, 6);
  for (const auto& net : nets) {
    const auto theta = perturbed(net.init_parameters(2), 0.05);
    Network::Cache cache;
    JetBatch out;
    net.forward_batch(theta, JetBatch::seed(xs, ys, 2), cache, out);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto j = net.forward<double, Jet2<double>>(theta, Jet2<double>::seed_x(xs[i]), Jet2<double>::seed_y(ys[i]));
      const auto r = static_cast<Eigen::Index>(i);
      CHECK(out.v()(r, 0) == doctest::Approx(j.v).epsilon(1e-12));
      CHECK(out.dx()(r, 0) == doctest::Approx(j.dx).epsilon(1e-11));
      CHECK(out.dy()(r, 0) == doctest::Approx(j.dy).epsilon(1e-11));
      CHECK(out.dxx()(r, 0) == doctest::Approx(j.dxx).epsilon(1e-10));
      CHECK(out.dyy()(r, 0) == doctest::Approx(j.dyy).epsilon(1e-10));
    }
  }
}

TEST_CASE("checkpoints round-trip through JSON") {
  const Network net(KanConfig{2, 3, 3, 3, -2.0, 2.0});
  const auto theta = perturbed(net.init_parameters(4), 0.3);
  const auto j = nlohmann::json::parse(checkpoint_json(net, theta, 4).dump());
  const auto [back, params] = network_from_checkpoint(j);
  CHECK(params == theta);
  CHECK(back.config_json() == net.config_json());
  auto bad = j;
  bad["parameters"].erase(0);
  CHECK_THROWS(network_from_checkpoint(bad));
}
