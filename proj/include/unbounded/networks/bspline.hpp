#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace unbounded::networks {

/// Uniform knot vector for a grid of `grid_size` cells over [lo, hi],
/// extended by `degree` cells on each side: grid_size + 2*degree + 1 knots.
std::vector<double> uniform_knots(int grid_size, int degree, double lo, double hi);

/// Number of basis functions a knot vector supports at the given degree.
std::size_t basis_count(std::size_t knot_count, int degree);

/// Dense B-spline basis values at x (Cox-de Boor, half-open cells
/// [t_i, t_{i+1})). Zero outside [t_0, t_last). Requires nondecreasing
/// knots and at least degree + 2 of them.
std::vector<double> bspline_basis(std::span<const double> knots, int degree, double x);

/// Nonzero basis functions at x and their derivatives.
/// `values[d * (degree + 1) + r]` is the d-th derivative of basis
/// `first + r`; entries whose index falls outside [0, basis_count) are zero.
/// `inside` is false when x lies outside [t_0, t_last) and every value is 0.
struct LocalBasis {
  int first = 0;
  bool inside = false;
  std::vector<double> values;
};

/// Local basis derivatives up to `max_order`; orders above the degree are
/// zero. Evaluated with the triangular derivative scheme (Piegl & Tiller
/// A2.3) on the knot vector padded with virtual cells, so cells near either
/// end need no special cases.
LocalBasis bspline_local(std::span<const double> knots, int degree, double x, int max_order);

/// Allocation-free form of bspline_local used by the batched KAN layers.
/// `out` must hold (max_order + 1) * (degree + 1) doubles.
void bspline_local_into(std::span<const double> knots, int degree, double x, int max_order,
                        int& first, bool& inside, std::span<double> out);

inline constexpr int kMaxSplineDegree = 7;

/// Cox-de Boor recursion on any arithmetic type (double, TapeScalar,
/// Jet2<...>). Only the k+1 functions that can be nonzero at x are built;
/// the cell is chosen from the plain value `xv` of x. Knot values enter as
/// constants, so derivatives flow through x only.
template <class T>
std::vector<T> bspline_basis_generic(std::span<const double> knots, int degree, const T& x,
                                     double xv) {
  if (degree < 0) throw std::invalid_argument("bspline_basis: negative degree");
  if (knots.size() < static_cast<std::size_t>(degree) + 2) {
    throw std::invalid_argument("bspline_basis: need at least degree + 2 knots");
  }
  const std::size_t m = knots.size();
  const std::size_t nb = m - static_cast<std::size_t>(degree) - 1;
  std::vector<T> out(nb, T(0.0));
  if (!(xv >= knots.front() && xv < knots.back())) return out;

  // Cell s with t_s <= x < t_{s+1}, skipping empty cells of repeated knots.
  int s = 0;
  while (static_cast<std::size_t>(s) + 2 < m && knots[static_cast<std::size_t>(s) + 1] <= xv) ++s;

  // level[i] holds N_{i,p}; only i in [s - p, s] can be nonzero.
  std::vector<T> level(m - 1, T(0.0));
  level[static_cast<std::size_t>(s)] = T(1.0);
  for (int p = 1; p <= degree; ++p) {
    const int count = static_cast<int>(m) - 1 - p;
    std::vector<T> next(static_cast<std::size_t>(count), T(0.0));
    for (int i = std::max(0, s - p); i <= s && i < count; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const auto up = static_cast<std::size_t>(p);
      const double dl = knots[u + up] - knots[u];
      const double dr = knots[u + up + 1] - knots[u + 1];
      const bool left = i > s - p && dl > 0.0;
      const bool right = i < s && dr > 0.0;
      if (left && right) {
        next[u] = (x - knots[u]) / dl * level[u] + (knots[u + up + 1] - x) / dr * level[u + 1];
      } else if (left) {
        next[u] = (x - knots[u]) / dl * level[u];
      } else if (right) {
        next[u] = (knots[u + up + 1] - x) / dr * level[u + 1];
      }
    }
    level = std::move(next);
  }
  for (std::size_t i = 0; i < nb; ++i) out[i] = level[i];
  return out;
}

}  // namespace unbounded::networks
