#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "unbounded/autodiff/jet.hpp"
#include "unbounded/autodiff/jet_batch.hpp"
#include "unbounded/networks/bspline.hpp"
#include "unbounded/networks/mlp.hpp"

namespace unbounded::networks {

/// Kolmogorov-Arnold network R^2 -> R: layers 2 -> W -> ... -> W -> 1
/// (`hidden_layers` hidden layers of `width` nodes). Every edge carries
///   phi(x) = w_b * silu(x) + w_s * sum_m c_m B_m(x)
/// with degree-`degree` B-splines on `grid_size` uniform cells over
/// [grid_lo, grid_hi], extended by `degree` cells each side.
struct KanConfig {
  int hidden_layers = 5;
  int width = 10;
  int grid_size = 3;
  int degree = 3;
  double grid_lo = -3.0;
  double grid_hi = 3.0;

  void validate() const;
  std::vector<std::pair<int, int>> layer_shapes() const;
  std::vector<double> knots() const;
  /// G + k spline coefficients per edge.
  std::size_t basis_per_edge() const;
  /// G + k + 2 parameters per edge.
  std::size_t params_per_edge() const;
  std::size_t edge_count() const;
  std::size_t parameter_count() const;
};

struct KanEdge {
  std::vector<double> coeffs;
  double base_weight = 1.0;
  double spline_weight = 1.0;
};

/// Edges per layer, ordered (i -> j) with the source index major. The flat
/// layout stores each edge contiguously as [c_0 .. c_{G+k-1}, w_b, w_s].
struct KanParams {
  std::vector<std::vector<KanEdge>> layers;

  std::vector<double> flatten() const;
  static KanParams unflatten(const KanConfig& config, std::span<const double> flat);
};

/// Initialisation scales. Defaults follow the reference KAN recipe:
/// c ~ N(0, coeff_std^2), w_b ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) and
/// w_s = 1/sqrt(fan_in) when `scale_by_fan_in`, otherwise w_b = w_s = 1.
struct KanInit {
  double coeff_std = 0.1;
  bool scale_by_fan_in = true;
};

KanParams kan_init(const KanConfig& config, std::uint64_t seed, const KanInit& init = {});

namespace detail {

inline double plain_value(double v) { return v; }
inline double plain_value(const autodiff::TapeScalar& v) { return v.value(); }
template <class T>
double plain_value(const autodiff::Jet2<T>& v) {
  return plain_value(v.v);
}

}  // namespace detail

/// One edge function on any arithmetic. `edge` holds [c..., w_b, w_s].
template <class P, class A>
A kan_edge(std::span<const P> edge, std::span<const double> knots, int degree, const A& x) {
  using autodiff::silu;
  const std::size_t nb = edge.size() - 2;
  const double xv = detail::plain_value(x);
  A spline = detail::lift<A>(P(0.0));
  if (xv >= knots.front() && xv < knots.back()) {
    const std::vector<A> basis = bspline_basis_generic<A>(knots, degree, x, xv);
    // Only the cell's degree + 1 functions can be nonzero.
    std::size_t cell = 0;
    while (cell + 2 < knots.size() && knots[cell + 1] <= xv) ++cell;
    const std::size_t lo = cell >= static_cast<std::size_t>(degree) ? cell - static_cast<std::size_t>(degree) : 0;
    for (std::size_t m = lo; m <= cell && m < nb; ++m) spline = spline + edge[m] * basis[m];
  }
  return edge[nb] * A(silu(x)) + edge[nb + 1] * spline;
}

/// Scalar forward pass; see mlp_forward for the P/A convention.
template <class P, class A>
A kan_forward(const KanConfig& config, std::span<const P> flat, const A& x, const A& y) {
  const auto shapes = config.layer_shapes();
  const std::vector<double> knots = config.knots();
  const std::size_t per_edge = config.params_per_edge();
  std::vector<A> act{x, y};
  std::size_t offset = 0;
  for (const auto& [fan_in, fan_out] : shapes) {
    std::vector<A> next(static_cast<std::size_t>(fan_out), detail::lift<A>(P(0.0)));
    for (std::size_t i = 0; i < static_cast<std::size_t>(fan_in); ++i) {
      for (std::size_t j = 0; j < static_cast<std::size_t>(fan_out); ++j) {
        const std::size_t e = i * static_cast<std::size_t>(fan_out) + j;
        next[j] = next[j] + kan_edge<P, A>(flat.subspan(offset + e * per_edge, per_edge), knots,
                                           config.degree, act[i]);
      }
    }
    offset += static_cast<std::size_t>(fan_in * fan_out) * per_edge;
    act = std::move(next);
  }
  return act.front();
}

struct KanLayerCache {
  autodiff::JetBatch input;
  autodiff::JetBatch silu;
  autodiff::JetBatch basis;            // n x (fan_in * nb)
  autodiff::Matrix silu_d1, silu_d2, silu_d3;
  std::vector<int> first;              // first local basis index per (point, input)
  std::vector<double> local;           // local basis derivatives per (point, input)
  autodiff::Matrix base_weights;       // fan_in x fan_out
  autodiff::Matrix spline_matrix;      // (fan_in * nb) x fan_out, w_s * c
};

/// Per-layer intermediates of the batched pass plus reusable scratch.
struct KanCache {
  std::vector<KanLayerCache> layers;
  autodiff::JetBatch acts[2];
  autodiff::Matrix sig, d0, d1, d2, d3;
  autodiff::Matrix g_wb, g_spline, g_basis;
  autodiff::JetBatch g_silu, grad_a, grad_b;
};

void kan_forward_batch(const KanConfig& config, std::span<const double> flat,
                       const autodiff::JetBatch& input, KanCache& cache, autodiff::JetBatch& out);

void kan_backward_batch(const KanConfig& config, std::span<const double> flat, KanCache& cache,
                        const autodiff::JetBatch& grad_out, std::span<double> grad);

}  // namespace unbounded::networks
