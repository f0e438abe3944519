#include "unbounded/networks/bspline.hpp"

#include <array>
#include <cmath>

namespace unbounded::networks {

std::vector<double> uniform_knots(int grid_size, int degree, double lo, double hi) {
  if (grid_size < 1) throw std::invalid_argument("uniform_knots: grid_size must be >= 1");
  if (degree < 0) throw std::invalid_argument("uniform_knots: negative degree");
  if (!(lo < hi)) throw std::invalid_argument("uniform_knots: need lo < hi");
  const double h = (hi - lo) / grid_size;
  std::vector<double> knots(static_cast<std::size_t>(grid_size + 2 * degree + 1));
  for (std::size_t i = 0; i < knots.size(); ++i) {
    knots[i] = lo + (static_cast<double>(i) - degree) * h;
  }
  return knots;
}

std::size_t basis_count(std::size_t knot_count, int degree) {
  if (degree < 0 || knot_count < static_cast<std::size_t>(degree) + 2) {
    throw std::invalid_argument("basis_count: need at least degree + 2 knots");
  }
  return knot_count - static_cast<std::size_t>(degree) - 1;
}

namespace {

void check_knots(std::span<const double> knots, int degree) {
  if (degree < 0) throw std::invalid_argument("bspline_basis: negative degree");
  if (degree > kMaxSplineDegree) throw std::invalid_argument("bspline_basis: degree too large");
  if (knots.size() < static_cast<std::size_t>(degree) + 2) {
    throw std::invalid_argument("bspline_basis: need at least degree + 2 knots");
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (knots[i] < knots[i - 1]) {
      throw std::invalid_argument("bspline_basis: knots must be nondecreasing");
    }
  }
  if (!(knots.back() > knots.front())) {
    throw std::invalid_argument("bspline_basis: knot vector has zero length");
  }
}

}  // namespace

void bspline_local_into(std::span<const double> knots, int degree, double x, int max_order,
                        int& first, bool& inside, std::span<double> out) {
  const int p = degree;
  if (max_order < 0 ||
      out.size() < static_cast<std::size_t>(max_order + 1) * static_cast<std::size_t>(p + 1)) {
    throw std::invalid_argument("bspline_local: output buffer too small");
  }
  std::fill(out.begin(), out.begin() + (max_order + 1) * (p + 1), 0.0);

  const int m = static_cast<int>(knots.size());
  inside = x >= knots.front() && x < knots.back();
  first = 0;
  if (!inside) return;

  int s = 0;
  while (s + 2 < m && knots[static_cast<std::size_t>(s) + 1] <= x) ++s;
  first = s - p;

  // Virtual cells of average width past both ends.
  const double h = (knots.back() - knots.front()) / (m - 1);
  auto knot = [&](int idx) {
    if (idx < 0) return knots.front() + idx * h;
    if (idx >= m) return knots.back() + (idx - m + 1) * h;
    return knots[static_cast<std::size_t>(idx)];
  };

  constexpr int kW = kMaxSplineDegree + 1;
  std::array<std::array<double, kW>, kW> ndu{};
  std::array<double, kW> left{};
  std::array<double, kW> right{};
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - knot(s + 1 - j);
    right[j] = knot(s + j) - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }
  for (int j = 0; j <= p; ++j) out[static_cast<std::size_t>(j)] = ndu[j][p];

  const int n = std::min(max_order, p);
  std::array<std::array<double, kW>, 2> a{};
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= n; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      out[static_cast<std::size_t>(k * (p + 1) + r)] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= n; ++k) {
    for (int j = 0; j <= p; ++j) out[static_cast<std::size_t>(k * (p + 1) + j)] *= factor;
    factor *= (p - k);
  }

  // Drop the virtual basis functions.
  const int nb = m - p - 1;
  for (int r = 0; r <= p; ++r) {
    const int idx = first + r;
    if (idx >= 0 && idx < nb) continue;
    for (int k = 0; k <= max_order; ++k) out[static_cast<std::size_t>(k * (p + 1) + r)] = 0.0;
  }
}

LocalBasis bspline_local(std::span<const double> knots, int degree, double x, int max_order) {
  check_knots(knots, degree);
  if (max_order < 0) throw std::invalid_argument("bspline_local: negative derivative order");
  LocalBasis lb;
  lb.values.assign(static_cast<std::size_t>((max_order + 1) * (degree + 1)), 0.0);
  bspline_local_into(knots, degree, x, max_order, lb.first, lb.inside, lb.values);
  return lb;
}

std::vector<double> bspline_basis(std::span<const double> knots, int degree, double x) {
  const LocalBasis lb = bspline_local(knots, degree, x, 0);
  std::vector<double> out(basis_count(knots.size(), degree), 0.0);
  if (!lb.inside) return out;
  for (int r = 0; r <= degree; ++r) {
    const int idx = lb.first + r;
    if (idx >= 0 && idx < static_cast<int>(out.size())) {
      out[static_cast<std::size_t>(idx)] = lb.values[static_cast<std::size_t>(r)];
    }
  }
  return out;
}

}  // namespace unbounded::networks
