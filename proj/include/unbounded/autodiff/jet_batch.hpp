#pragma once

#include <span>

#include <Eigen/Dense>

namespace unbounded::autodiff {

using Matrix = Eigen::MatrixXd;
using Block = Eigen::Block<Matrix>;
using ConstBlock = Eigen::Block<const Matrix>;

/// Jet2 over a batch of points, components stacked vertically:
///   rows [0, n)    value
///   rows [n, 2n)   d/dx       (order >= 1)
///   rows [2n, 3n)  d/dy       (order >= 1)
///   rows [3n, 4n)  d2/dx2     (order 2)
///   rows [4n, 5n)  d2/dy2     (order 2)
/// Column j is feature j. Stacking lets an affine layer act on every
/// component with a single matrix product.
///
/// This is the layer-level counterpart of Jet2<TapeScalar>: each layer
/// supplies its own adjoint rule, so a full-batch residual costs a handful of
/// GEMMs instead of one tape node per scalar operation.
struct JetBatch {
  Matrix data;
  Eigen::Index n = 0;
  int order = 2;

  static constexpr int components(int order) noexcept { return order == 0 ? 1 : order == 1 ? 3 : 5; }

  Eigen::Index rows() const noexcept { return n; }
  Eigen::Index cols() const noexcept { return data.cols(); }
  int component_count() const noexcept { return components(order); }

  Block comp(int c) { return data.middleRows(c * n, n); }
  ConstBlock comp(int c) const { return data.middleRows(c * n, n); }
  Block v() { return comp(0); }
  ConstBlock v() const { return comp(0); }
  Block dx() { return comp(1); }
  ConstBlock dx() const { return comp(1); }
  Block dy() { return comp(2); }
  ConstBlock dy() const { return comp(2); }
  Block dxx() { return comp(3); }
  ConstBlock dxx() const { return comp(3); }
  Block dyy() { return comp(4); }
  ConstBlock dyy() const { return comp(4); }

  /// Shape without initialising; reuses the allocation when possible.
  void resize(Eigen::Index points, Eigen::Index features, int jet_order);

  /// Input jets for points (x_i, y_i): columns (x, y).
  static JetBatch seed(std::span<const double> xs, std::span<const double> ys, int order);
};

/// Elementwise phi on a jet given phi, phi', phi'' at a.v() (n x cols each).
void elementwise_forward(const JetBatch& a, const Matrix& d0, const Matrix& d1, const Matrix& d2,
                         JetBatch& out);

/// Adjoint of elementwise_forward with respect to its input jet. Reads
/// phi derivatives up to order + 1 (d3 unused below second order).
void elementwise_backward(const JetBatch& a, const JetBatch& grad_out, const Matrix& d1,
                          const Matrix& d2, const Matrix& d3, JetBatch& out);

/// tanh via a vectorised exponential, 1 - 2 / (e^{2z} + 1). Absolute error
/// is a few ulp of 1; relative accuracy degrades only for |z| < 1e-8.
void fast_tanh(const Eigen::Ref<const Matrix>& z, Eigen::Ref<Matrix> out);

/// out = tanh(z) on a jet; one fused pass over the components.
void tanh_forward(const JetBatch& z, JetBatch& out);

/// Adjoint of tanh_forward. `h` is the value block of its output.
void tanh_backward(const JetBatch& z, const Eigen::Ref<const Matrix>& h, const JetBatch& grad_out,
                   JetBatch& out);

/// out = a * weights on every component, plus `bias` on the value rows.
void linear_forward(const JetBatch& a, const Eigen::Ref<const Matrix>& weights,
                    const double* bias, JetBatch& out);

/// Adjoint of linear_forward: accumulates into grad_weights (and grad_bias
/// when non-null) and writes the input adjoint when `grad_in` is non-null.
void linear_backward(const JetBatch& a, const JetBatch& grad_out,
                     const Eigen::Ref<const Matrix>& weights, Eigen::Ref<Matrix> grad_weights,
                     double* grad_bias, JetBatch* grad_in);

}  // namespace unbounded::autodiff
