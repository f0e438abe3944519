#include "unbounded/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unbounded::loss {

using autodiff::JetBatch;

void LossWeights::validate() const {
  for (double w : {pde, u, k, bnd}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("LossWeights: every lambda must be finite and >= 0");
    }
  }
}

void Batch::validate(problems::DomainKind kind) const {
  if (collocation.empty()) throw std::invalid_argument("Batch: collocation set is empty");
  if (obs_u.size() != obs_points.size() || obs_k.size() != obs_points.size()) {
    throw std::invalid_argument("Batch: observation values do not match observation points");
  }
  if (bnd_u.size() != bnd_points.size()) {
    throw std::invalid_argument("Batch: boundary values do not match boundary points");
  }
  if (kind == problems::DomainKind::semi_infinite && bnd_points.empty()) {
    throw std::invalid_argument("Batch: semi-infinite problems need boundary data");
  }
  for (double y : bnd_points.ys) {
    if (y != 0.0) throw std::invalid_argument("Batch: boundary points must lie on y = 0");
  }
}

TapeScalar residual_at(const Network& u_net, std::span<const TapeScalar> u_params,
                       const Network& k_net, std::span<const TapeScalar> k_params, double x,
                       double y, const ProblemSpec& spec) {
  using J = Jet2<TapeScalar>;
  const J xj = J::seed_x(TapeScalar(x));
  const J yj = J::seed_y(TapeScalar(y));
  const J u = u_net.forward<TapeScalar, J>(u_params, xj, yj);
  const J k = k_net.forward<TapeScalar, J>(k_params, xj, yj);
  return residual(u, k, problems::source_f(spec, x, y));
}

TapeScalar loss_pde(const Network& u_net, std::span<const TapeScalar> u_params,
                    const Network& k_net, std::span<const TapeScalar> k_params,
                    const PointSet& collocation, const ProblemSpec& spec) {
  if (collocation.empty()) throw std::invalid_argument("loss_pde: collocation set is empty");
  TapeScalar sum(0.0);
  for (std::size_t i = 0; i < collocation.size(); ++i) {
    const TapeScalar r =
        residual_at(u_net, u_params, k_net, k_params, collocation.xs[i], collocation.ys[i], spec);
    sum = sum + r * r;
  }
  return sum / static_cast<double>(collocation.size());
}

TapeScalar loss_data(const Network& net, std::span<const TapeScalar> params, const PointSet& points,
                     std::span<const double> targets) {
  if (points.size() != targets.size()) {
    throw std::invalid_argument("loss_data: points and targets differ in length");
  }
  if (points.empty()) return TapeScalar(0.0);
  TapeScalar sum(0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const TapeScalar pred = net.forward<TapeScalar, TapeScalar>(params, TapeScalar(points.xs[i]),
                                                                TapeScalar(points.ys[i]));
    const TapeScalar d = pred - targets[i];
    sum = sum + d * d;
  }
  return sum / static_cast<double>(points.size());
}

TapeScalar loss_boundary(const Network& u_net, std::span<const TapeScalar> u_params,
                         const PointSet& bnd_points, std::span<const double> bnd_values) {
  for (double y : bnd_points.ys) {
    if (y != 0.0) throw std::invalid_argument("loss_boundary: boundary points must lie on y = 0");
  }
  return loss_data(u_net, u_params, bnd_points, bnd_values);
}

TapeLoss loss_total(const Network& u_net, std::span<const TapeScalar> u_params,
                    const Network& k_net, std::span<const TapeScalar> k_params, const Batch& batch,
                    const LossWeights& weights, const ProblemSpec& spec) {
  weights.validate();
  batch.validate(spec.kind);
  TapeLoss l;
  l.pde = loss_pde(u_net, u_params, k_net, k_params, batch.collocation, spec);
  l.u = loss_data(u_net, u_params, batch.obs_points, batch.obs_u);
  l.k = loss_data(k_net, k_params, batch.obs_points, batch.obs_k);
  l.total = weights.pde * l.pde + weights.u * l.u + weights.k * l.k;
  if (spec.kind == problems::DomainKind::semi_infinite) {
    l.bnd = loss_boundary(u_net, u_params, batch.bnd_points, batch.bnd_u);
    l.total = l.total + weights.bnd * l.bnd;
  }
  return l;
}

Eigen::VectorXd residual_batch(const JetBatch& u, const JetBatch& k,
                               const Eigen::Ref<const Eigen::VectorXd>& f) {
  if (u.order < 2 || k.order < 1) {
    throw std::invalid_argument("residual_batch: u needs second and k first derivatives");
  }
  return (k.dx().col(0).array() * u.dx().col(0).array() +
          k.dy().col(0).array() * u.dy().col(0).array() +
          k.v().col(0).array() * (u.dxx().col(0).array() + u.dyy().col(0).array()) - f.array())
      .matrix();
}

LossEvaluator::LossEvaluator(Network u_net, Network k_net, Batch batch, LossWeights weights,
                             ProblemSpec spec)
    : u_net_(std::move(u_net)),
      k_net_(std::move(k_net)),
      batch_(std::move(batch)),
      weights_(weights),
      spec_(spec) {
  weights_.validate();
  spec_.validate();
  batch_.validate(spec_.kind);
  with_boundary_ = spec_.kind == problems::DomainKind::semi_infinite;

  const auto& c = batch_.collocation;
  for (std::size_t start = 0; start < c.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, c.size() - start);
    const auto xs = std::span(c.xs).subspan(start, len);
    const auto ys = std::span(c.ys).subspan(start, len);
    PdeChunk chunk{JetBatch::seed(xs, ys, 2), JetBatch::seed(xs, ys, 1),
                   Eigen::VectorXd(static_cast<Eigen::Index>(len))};
    for (std::size_t i = 0; i < len; ++i) {
      chunk.f(static_cast<Eigen::Index>(i)) = problems::source_f(spec_, xs[i], ys[i]);
    }
    pde_.push_back(std::move(chunk));
  }
  auto data_chunks = [](const PointSet& pts, std::span<const double> u, std::span<const double> k) {
    constexpr std::size_t kDataChunk = 4 * kChunk;
    std::vector<DataChunk> out;
    for (std::size_t start = 0; start < pts.size(); start += kDataChunk) {
      const std::size_t len = std::min(kDataChunk, pts.size() - start);
      DataChunk chunk;
      chunk.in = JetBatch::seed(std::span(pts.xs).subspan(start, len),
                                std::span(pts.ys).subspan(start, len), 0);
      const auto n = static_cast<Eigen::Index>(len);
      chunk.u = Eigen::Map<const Eigen::VectorXd>(u.data() + start, n);
      if (!k.empty()) chunk.k = Eigen::Map<const Eigen::VectorXd>(k.data() + start, n);
      out.push_back(std::move(chunk));
    }
    return out;
  };
  obs_ = data_chunks(batch_.obs_points, batch_.obs_u, batch_.obs_k);
  bnd_ = data_chunks(batch_.bnd_points, batch_.bnd_u, {});
}

// MSE over value-only chunks; adds scale * d(MSE)/d(params) into grad.
double LossEvaluator::data_term(const Network& net, std::span<const double> params,
                                const std::vector<DataChunk>& chunks, bool use_k, double scale,
                                std::span<double> grad) const {
  std::size_t total = 0;
  for (const auto& c : chunks) total += static_cast<std::size_t>(c.in.n);
  if (total == 0) return 0.0;
  const auto n = static_cast<double>(total);
  Scratch& w = scratch_;
  Network::Cache& cache = use_k ? w.k_cache : w.u_cache;
  double sum = 0.0;
  for (const auto& c : chunks) {
    net.forward_batch(params, c.in, cache, w.u_out);
    const Eigen::VectorXd diff = w.u_out.v().col(0) - (use_k ? c.k : c.u);
    sum += diff.squaredNorm();
    if (!grad.empty() && scale != 0.0) {
      w.gu.resize(c.in.n, 1, 0);
      w.gu.v() = (2.0 * scale / n) * diff;
      net.backward_batch(params, cache, w.gu, grad);
    }
  }
  return sum / n;
}

LossValues LossEvaluator::evaluate(std::span<const double> theta, std::span<double> grad) const {
  if (theta.size() != parameter_count()) {
    throw std::invalid_argument("LossEvaluator: parameter vector has wrong length");
  }
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != theta.size()) {
    throw std::invalid_argument("LossEvaluator: gradient vector has wrong length");
  }
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t pu = u_parameter_count();
  const auto theta_u = theta.subspan(0, pu);
  const auto theta_k = theta.subspan(pu);
  const auto grad_u = want_grad ? grad.subspan(0, pu) : std::span<double>{};
  const auto grad_k = want_grad ? grad.subspan(pu) : std::span<double>{};

  LossValues out;
  Scratch& w = scratch_;
  const auto n_pde = static_cast<double>(batch_.collocation.size());
  double sum = 0.0;
  for (const auto& c : pde_) {
    u_net_.forward_batch(theta_u, c.u_in, w.u_cache, w.u_out);
    k_net_.forward_batch(theta_k, c.k_in, w.k_cache, w.k_out);
    const Eigen::VectorXd r = residual_batch(w.u_out, w.k_out, c.f);
    sum += r.squaredNorm();
    if (!want_grad || weights_.pde == 0.0) continue;
    const Eigen::ArrayXd gr = (2.0 * weights_.pde / n_pde) * r.array();
    const JetBatch& u = w.u_out;
    const JetBatch& k = w.k_out;
    w.gu.resize(c.u_in.n, 1, 2);
    w.gu.v().setZero();
    w.gu.dx().col(0).array() = gr * k.dx().col(0).array();
    w.gu.dy().col(0).array() = gr * k.dy().col(0).array();
    w.gu.dxx().col(0).array() = gr * k.v().col(0).array();
    w.gu.dyy() = w.gu.dxx();
    w.gk.resize(c.k_in.n, 1, 1);
    w.gk.v().col(0).array() = gr * (u.dxx().col(0).array() + u.dyy().col(0).array());
    w.gk.dx().col(0).array() = gr * u.dx().col(0).array();
    w.gk.dy().col(0).array() = gr * u.dy().col(0).array();
    u_net_.backward_batch(theta_u, w.u_cache, w.gu, grad_u);
    k_net_.backward_batch(theta_k, w.k_cache, w.gk, grad_k);
  }
  out.pde = sum / n_pde;
  out.u = data_term(u_net_, theta_u, obs_, false, weights_.u, grad_u);
  out.k = data_term(k_net_, theta_k, obs_, true, weights_.k, grad_k);
  out.total = weights_.pde * out.pde + weights_.u * out.u + weights_.k * out.k;
  if (with_boundary_) {
    out.bnd = data_term(u_net_, theta_u, bnd_, false, weights_.bnd, grad_u);
    out.total += weights_.bnd * out.bnd;
  }
  return out;
}

}  // namespace unbounded::loss
