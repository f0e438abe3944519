#include <cmath>

#include <doctest.h>

#include "oracles.hpp"
#include "unbounded/loss.hpp"

using namespace unbounded;
using namespace unbounded::loss;
using autodiff::Tape;
using networks::KanConfig;
using networks::MlpConfig;

namespace {

Batch small_batch(const ProblemSpec& spec, std::size_t n) {
  Batch b;
  b.collocation = sampling::sample_infinite(n, {0.0, spec.kind == problems::DomainKind::infinite ? 0.0 : 1.0},
                                            {1.5, 1.5}, 1);
  if (spec.kind == problems::DomainKind::semi_infinite) {
    for (double& y : b.collocation.ys) y = std::abs(y);
  }
  b.obs_points = sampling::sample_uniform_box(n, spec.eval_box, 2);
  for (std::size_t i = 0; i < n; ++i) {
    b.obs_u.push_back(problems::u_exact(spec, b.obs_points.xs[i], b.obs_points.ys[i]));
    b.obs_k.push_back(problems::k_exact(spec, b.obs_points.ys[i]));
  }
  if (spec.kind == problems::DomainKind::semi_infinite) {
    b.bnd_points = sampling::sample_boundary(n / 4 + 1, -3.0, 3.0, 3);
    for (double x : b.bnd_points.xs) b.bnd_u.push_back(problems::boundary_trace(spec, x));
  }
  return b;
}

std::vector<double> jitter(std::vector<double> v, double s) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += s * std::cos(0.9 * static_cast<double>(i));
  return v;
}

}  // namespace

TEST_CASE("pointwise residual by hand") {
  const Jet2<double> u{1.0, 2.0, 3.0, 4.0, 5.0};
  const Jet2<double> k{2.0, 1.0, -1.0, 0.0, 0.0};
  CHECK(residual(u, k, 1.0) == 16.0);
}

TEST_CASE("constant networks give closed-form data and PDE terms") {
  const Network net(MlpConfig{1, 2});
  std::vector<double> theta(net.parameter_count(), 0.0);
  theta.back() = 0.5;
  sampling::PointSet pts;
  pts.xs = {0.0, 1.0, -2.0};
  pts.ys = {0.0, 0.5, 1.0};
  const std::vector<double> targets{0.0, 1.0, 2.0};
  Tape t;
  const auto leaves = t.variables(theta);
  CHECK(loss_data(net, leaves, pts, targets).value() == doctest::Approx(11.0 / 12.0).epsilon(1e-15));

  // Constant u and k: every derivative vanishes, so R = -f.
  const auto spec = ProblemSpec::infinite();
  double expect = 0.0;
  for (std::size_t i = 0; i < 3; ++i) expect += std::pow(problems::source_f(spec, pts.xs[i], pts.ys[i]), 2) / 3.0;
  CHECK(loss_pde(net, leaves, net, leaves, pts, spec).value() == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("batched residuals at the exact fields vanish") {
  for (const auto& spec : {ProblemSpec::infinite(), ProblemSpec::semi_infinite()}) {
    const auto xs = oracle::uniform(37, -3.0, 3.0, 1);
    const auto ys = oracle::uniform(37, 0.0, 3.0, 2);
    autodiff::JetBatch u;
    autodiff::JetBatch k;
    u.resize(37, 1, 2);
    k.resize(37, 1, 1);
    Eigen::VectorXd f(37);
    for (Eigen::Index i = 0; i < 37; ++i) {
      const auto s = static_cast<std::size_t>(i);
      const auto uj = problems::u_jet_exact(spec, xs[s], ys[s]);
      const auto kj = problems::k_jet_exact(spec, xs[s], ys[s]);
      u.v()(i, 0) = uj.v;
      u.dx()(i, 0) = uj.dx;
      u.dy()(i, 0) = uj.dy;
      u.dxx()(i, 0) = uj.dxx;
      u.dyy()(i, 0) = uj.dyy;
      k.v()(i, 0) = kj.v;
      k.dx()(i, 0) = kj.dx;
      k.dy()(i, 0) = kj.dy;
      f(i) = problems::source_f(spec, xs[s], ys[s]);
    }
    const Eigen::VectorXd r = residual_batch(u, k, f);
    CHECK(r.cwiseAbs().maxCoeff() <= 1e-11);
    CHECK(r.squaredNorm() / static_cast<double>(r.size()) <= 1e-18);
    autodiff::JetBatch k0;
    k0.resize(37, 1, 0);
    CHECK_THROWS_AS(residual_batch(u, k0, f), std::invalid_argument);
  }
}

TEST_CASE("batched loss and gradient agree with the scalar tape") {
  struct Case {
    Network u;
    Network k;
    ProblemSpec spec;
  };
  const Case cases[] = {
      {Network(MlpConfig{2, 5}), Network(MlpConfig{2, 4}), ProblemSpec::infinite()},
      {Network(KanConfig{2, 3, 3, 3, -3.0, 3.0}), Network(KanConfig{1, 3, 3, 3, -3.0, 3.0}),
       ProblemSpec::semi_infinite()},
  };
  for (const auto& c : cases) {
    // 300 points spans two collocation chunks.
    const Batch batch = small_batch(c.spec, 300);
    const LossWeights w{1.5, 2.0, 0.5, 3.0};
    const LossEvaluator ev(c.u, c.k, batch, w, c.spec);
    auto theta = jitter(c.u.init_parameters(4), 0.03);
    const auto tk = jitter(c.k.init_parameters(5), 0.03);
    theta.insert(theta.end(), tk.begin(), tk.end());

    std::vector<double> grad(theta.size());
    const LossValues vals = ev.evaluate(theta, grad);

    Tape t;
    const auto leaves = t.variables(theta);
    const std::span<const TapeScalar> all(leaves);
    const auto tl = loss_total(c.u, all.first(c.u.parameter_count()), c.k,
                               all.subspan(c.u.parameter_count()), batch, w, c.spec);
    CHECK(vals.total == doctest::Approx(tl.total.value()).epsilon(1e-11));
    CHECK(vals.pde == doctest::Approx(tl.pde.value()).epsilon(1e-11));
    CHECK(vals.u == doctest::Approx(tl.u.value()).epsilon(1e-11));
    CHECK(vals.k == doctest::Approx(tl.k.value()).epsilon(1e-11));
    CHECK(vals.bnd == doctest::Approx(tl.bnd.value()).epsilon(1e-11));
    const auto tg = t.backward(tl.total, leaves);
    double gmax = 0.0;
    for (double g : tg) gmax = std::max(gmax, std::abs(g));
    for (std::size_t i = 0; i < grad.size(); ++i) CHECK(oracle::rel_err(grad[i], tg[i], 1e-8 * gmax) <= 1e-9);

    // Finite differences resolve about 1e-10 absolute at this loss scale, so
    // coordinates far below the largest gradient are compared against it.
    // The scalar tape above already checks every coordinate exactly.
    auto f = [&](std::span<const double> th) { return ev.evaluate(th, {}).total; };
    for (std::size_t i = 0; i < theta.size(); i += 5) {
      INFO("coordinate " << i << " of " << theta.size());
      CHECK(oracle::fd_rel_err(f, theta, i, grad[i], 1e-3 * gmax) <= 1e-6);
    }
  }
}

TEST_CASE("loss weights scale their own term only") {
  const auto spec = ProblemSpec::semi_infinite();
  const Network u(MlpConfig{1, 4});
  const Network k(MlpConfig{1, 3});
  const Batch batch = small_batch(spec, 40);
  auto theta = u.init_parameters(1);
  const auto tk = k.init_parameters(2);
  theta.insert(theta.end(), tk.begin(), tk.end());
  const LossValues base = LossEvaluator(u, k, batch, LossWeights{}, spec).evaluate(theta, {});
  CHECK(base.total == doctest::Approx(base.pde + base.u + base.k + base.bnd).epsilon(1e-14));
  const LossValues scaled = LossEvaluator(u, k, batch, LossWeights{3.0, 1.0, 0.0, 2.0}, spec).evaluate(theta, {});
  CHECK(scaled.pde == doctest::Approx(base.pde).epsilon(1e-14));
  CHECK(scaled.total == doctest::Approx(3.0 * base.pde + base.u + 2.0 * base.bnd).epsilon(1e-13));

  // On the infinite domain the boundary weight has no effect.
  const auto inf = ProblemSpec::infinite();
  Batch b2 = small_batch(inf, 40);
  const auto l1 = LossEvaluator(u, k, b2, LossWeights{1, 1, 1, 1}, inf).evaluate(theta, {});
  const auto l2 = LossEvaluator(u, k, b2, LossWeights{1, 1, 1, 100}, inf).evaluate(theta, {});
  CHECK(l1.total == l2.total);
  CHECK(l1.bnd == 0.0);
}

TEST_CASE("malformed batches and weights are rejected") {
  const auto semi = ProblemSpec::semi_infinite();
  const Network net(MlpConfig{1, 2});
  Batch b = small_batch(semi, 10);
  b.bnd_points = {};
  b.bnd_u.clear();
  CHECK_THROWS_AS(LossEvaluator(net, net, b, LossWeights{}, semi), std::invalid_argument);
  Batch c = small_batch(semi, 10);
  c.obs_u.pop_back();
  CHECK_THROWS_AS(c.validate(semi.kind), std::invalid_argument);
  Batch d = small_batch(semi, 10);
  d.bnd_points.ys[0] = 0.1;
  CHECK_THROWS_AS(d.validate(semi.kind), std::invalid_argument);
  CHECK_THROWS_AS((LossWeights{-1.0, 1.0, 1.0, 1.0}).validate(), std::invalid_argument);

  const LossEvaluator ev(net, net, small_batch(semi, 10), LossWeights{}, semi);
  std::vector<double> shortv(3, 0.0);
  CHECK_THROWS_AS(ev.evaluate(shortv, {}), std::invalid_argument);
}
