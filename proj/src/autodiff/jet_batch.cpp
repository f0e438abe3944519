#include "unbounded/autodiff/jet_batch.hpp"

#include <stdexcept>

namespace unbounded::autodiff {

void JetBatch::resize(Eigen::Index points, Eigen::Index features, int jet_order) {
  if (jet_order < 0 || jet_order > 2) throw std::invalid_argument("JetBatch: order must be 0, 1 or 2");
  n = points;
  order = jet_order;
  data.resize(components(jet_order) * points, features);
}

JetBatch JetBatch::seed(std::span<const double> xs, std::span<const double> ys, int order) {
  if (xs.size() != ys.size()) throw std::invalid_argument("JetBatch::seed: x and y lengths differ");
  JetBatch j;
  j.resize(static_cast<Eigen::Index>(xs.size()), 2, order);
  j.data.setZero();
  for (Eigen::Index i = 0; i < j.n; ++i) {
    j.v()(i, 0) = xs[static_cast<std::size_t>(i)];
    j.v()(i, 1) = ys[static_cast<std::size_t>(i)];
  }
  if (order >= 1) {
    j.dx().col(0).setOnes();
    j.dy().col(1).setOnes();
  }
  return j;
}

void elementwise_forward(const JetBatch& a, const Matrix& d0, const Matrix& d1, const Matrix& d2,
                         JetBatch& out) {
  out.resize(a.n, a.cols(), a.order);
  out.v() = d0;
  if (a.order == 0) return;
  const auto f1 = d1.array();
  out.dx().array() = f1 * a.dx().array();
  out.dy().array() = f1 * a.dy().array();
  if (a.order == 1) return;
  const auto f2 = d2.array();
  out.dxx().array() = f2 * a.dx().array().square() + f1 * a.dxx().array();
  out.dyy().array() = f2 * a.dy().array().square() + f1 * a.dyy().array();
}

void elementwise_backward(const JetBatch& a, const JetBatch& g, const Matrix& d1, const Matrix& d2,
                          const Matrix& d3, JetBatch& out) {
  out.resize(a.n, a.cols(), a.order);
  const auto f1 = d1.array();
  if (a.order == 0) {
    out.v().array() = g.v().array() * f1;
    return;
  }
  const auto f2 = d2.array();
  const auto ax = a.dx().array();
  const auto ay = a.dy().array();
  const auto gx = g.dx().array();
  const auto gy = g.dy().array();
  if (a.order == 1) {
    out.v().array() = g.v().array() * f1 + (gx * ax + gy * ay) * f2;
    out.dx().array() = gx * f1;
    out.dy().array() = gy * f1;
    return;
  }
  const auto f3 = d3.array();
  const auto gxx = g.dxx().array();
  const auto gyy = g.dyy().array();
  out.v().array() = g.v().array() * f1 +
                    (gx * ax + gy * ay + gxx * a.dxx().array() + gyy * a.dyy().array()) * f2 +
                    (gxx * ax.square() + gyy * ay.square()) * f3;
  out.dx().array() = gx * f1 + 2.0 * gxx * f2 * ax;
  out.dy().array() = gy * f1 + 2.0 * gyy * f2 * ay;
  out.dxx().array() = gxx * f1;
  out.dyy().array() = gyy * f1;
}

void fast_tanh(const Eigen::Ref<const Matrix>& z, Eigen::Ref<Matrix> out) {
  out.array() = 1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0);
}

void tanh_forward(const JetBatch& z, JetBatch& out) {
  out.resize(z.n, z.cols(), z.order);
  fast_tanh(z.v(), out.v());
  if (z.order == 0) return;
  const Eigen::Index n = z.n;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double* zc = z.data.col(j).data();
    double* oc = out.data.col(j).data();
    const double* h = oc;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d1 = 1.0 - h[i] * h[i];
      oc[n + i] = d1 * zc[n + i];
      oc[2 * n + i] = d1 * zc[2 * n + i];
    }
    if (z.order == 1) continue;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d1 = 1.0 - h[i] * h[i];
      const double d2 = -2.0 * h[i] * d1;
      const double zx = zc[n + i];
      const double zy = zc[2 * n + i];
      oc[3 * n + i] = d2 * zx * zx + d1 * zc[3 * n + i];
      oc[4 * n + i] = d2 * zy * zy + d1 * zc[4 * n + i];
    }
  }
}

void tanh_backward(const JetBatch& z, const Eigen::Ref<const Matrix>& hv, const JetBatch& g,
                   JetBatch& out) {
  out.resize(z.n, z.cols(), z.order);
  const Eigen::Index n = z.n;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double* zc = z.data.col(j).data();
    const double* gc = g.data.col(j).data();
    const double* h = hv.col(j).data();
    double* oc = out.data.col(j).data();
    if (z.order == 0) {
      for (Eigen::Index i = 0; i < n; ++i) oc[i] = gc[i] * (1.0 - h[i] * h[i]);
    } else if (z.order == 1) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d1 = 1.0 - h[i] * h[i];
        const double d2 = -2.0 * h[i] * d1;
        const double gx = gc[n + i];
        const double gy = gc[2 * n + i];
        oc[i] = gc[i] * d1 + (gx * zc[n + i] + gy * zc[2 * n + i]) * d2;
        oc[n + i] = gx * d1;
        oc[2 * n + i] = gy * d1;
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double hh = h[i] * h[i];
        const double d1 = 1.0 - hh;
        const double d2 = -2.0 * h[i] * d1;
        const double d3 = d1 * (6.0 * hh - 2.0);
        const double zx = zc[n + i];
        const double zy = zc[2 * n + i];
        const double gx = gc[n + i];
        const double gy = gc[2 * n + i];
        const double gxx = gc[3 * n + i];
        const double gyy = gc[4 * n + i];
        oc[i] = gc[i] * d1 + (gx * zx + gy * zy + gxx * zc[3 * n + i] + gyy * zc[4 * n + i]) * d2 +
                (gxx * zx * zx + gyy * zy * zy) * d3;
        oc[n + i] = gx * d1 + 2.0 * gxx * d2 * zx;
        oc[2 * n + i] = gy * d1 + 2.0 * gyy * d2 * zy;
        oc[3 * n + i] = gxx * d1;
        oc[4 * n + i] = gyy * d1;
      }
    }
  }
}

void linear_forward(const JetBatch& a, const Eigen::Ref<const Matrix>& weights, const double* bias,
                    JetBatch& out) {
  out.n = a.n;
  out.order = a.order;
  out.data.resize(a.data.rows(), weights.cols());
  out.data.noalias() = a.data * weights;
  if (bias != nullptr) {
    out.v().rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias, weights.cols());
  }
}

void linear_backward(const JetBatch& a, const JetBatch& g, const Eigen::Ref<const Matrix>& weights,
                     Eigen::Ref<Matrix> grad_weights, double* grad_bias, JetBatch* grad_in) {
  // Per component: some stacked heights (3 x 256 rows) hit a slow path in
  // the transposed product, while single blocks run at full speed.
  for (int c = 0; c < a.component_count(); ++c) {
    grad_weights.noalias() += a.comp(c).transpose() * g.comp(c);
  }
  if (grad_bias != nullptr) {
    Eigen::Map<Eigen::RowVectorXd>(grad_bias, weights.cols()) += g.v().colwise().sum();
  }
  if (grad_in == nullptr) return;
  grad_in->n = a.n;
  grad_in->order = a.order;
  grad_in->data.resize(g.data.rows(), weights.rows());
  grad_in->data.noalias() = g.data * weights.transpose();
}

}  // namespace unbounded::autodiff
