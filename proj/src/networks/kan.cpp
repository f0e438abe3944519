#include "unbounded/networks/kan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace unbounded::networks {

using autodiff::JetBatch;
using autodiff::Matrix;

void KanConfig::validate() const {
  if (hidden_layers < 1 || width < 1) {
    throw std::invalid_argument("KanConfig: hidden_layers and width must be positive");
  }
  if (grid_size < 1) throw std::invalid_argument("KanConfig: grid_size must be positive");
  if (degree < 0 || degree > kMaxSplineDegree) {
    throw std::invalid_argument("KanConfig: spline degree out of range");
  }
  if (!(grid_lo < grid_hi)) throw std::invalid_argument("KanConfig: grid range is empty");
}

std::vector<std::pair<int, int>> KanConfig::layer_shapes() const {
  validate();
  std::vector<std::pair<int, int>> shapes;
  shapes.emplace_back(2, width);
  for (int l = 1; l < hidden_layers; ++l) shapes.emplace_back(width, width);
  shapes.emplace_back(width, 1);
  return shapes;
}

std::vector<double> KanConfig::knots() const {
  validate();
  return uniform_knots(grid_size, degree, grid_lo, grid_hi);
}

std::size_t KanConfig::basis_per_edge() const {
  validate();
  return static_cast<std::size_t>(grid_size + degree);
}

std::size_t KanConfig::params_per_edge() const { return basis_per_edge() + 2; }

std::size_t KanConfig::edge_count() const {
  std::size_t edges = 0;
  for (const auto& [in, out] : layer_shapes()) edges += static_cast<std::size_t>(in * out);
  return edges;
}

std::size_t KanConfig::parameter_count() const { return edge_count() * params_per_edge(); }

std::vector<double> KanParams::flatten() const {
  std::vector<double> flat;
  for (const auto& layer : layers) {
    for (const auto& e : layer) {
      flat.insert(flat.end(), e.coeffs.begin(), e.coeffs.end());
      flat.push_back(e.base_weight);
      flat.push_back(e.spline_weight);
    }
  }
  return flat;
}

KanParams KanParams::unflatten(const KanConfig& config, std::span<const double> flat) {
  if (flat.size() != config.parameter_count()) {
    throw std::invalid_argument("KanParams::unflatten: expected " +
                                std::to_string(config.parameter_count()) + " values, got " +
                                std::to_string(flat.size()));
  }
  const std::size_t nb = config.basis_per_edge();
  KanParams p;
  std::size_t offset = 0;
  for (const auto& [in, out] : config.layer_shapes()) {
    std::vector<KanEdge> layer(static_cast<std::size_t>(in * out));
    for (auto& e : layer) {
      e.coeffs.assign(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                      flat.begin() + static_cast<std::ptrdiff_t>(offset + nb));
      e.base_weight = flat[offset + nb];
      e.spline_weight = flat[offset + nb + 1];
      offset += nb + 2;
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

KanParams kan_init(const KanConfig& config, std::uint64_t seed, const KanInit& init) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> coeff(0.0, init.coeff_std);
  const std::size_t nb = config.basis_per_edge();
  KanParams p;
  for (const auto& [in, out] : config.layer_shapes()) {
    const double scale = init.scale_by_fan_in ? 1.0 / std::sqrt(static_cast<double>(in)) : 1.0;
    std::uniform_real_distribution<double> base(-scale, scale);
    std::vector<KanEdge> layer(static_cast<std::size_t>(in * out));
    for (auto& e : layer) {
      e.coeffs.resize(nb);
      for (auto& c : e.coeffs) c = coeff(rng);
      e.base_weight = init.scale_by_fan_in ? base(rng) : 1.0;
      e.spline_weight = scale;
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

namespace {

// silu and its first three derivatives, with s = sigmoid(x), q = s (1 - s):
//   silu' = s + x q,  silu'' = q (2 + x (1 - 2s)),
//   silu''' = q ((1 - 2s)(3 + x (1 - 2s)) - 2 x q).
void silu_derivs(const Eigen::Ref<const Matrix>& a, int up_to, KanCache& c) {
  const auto x = a.array();
  c.sig.resize(a.rows(), a.cols());
  c.sig.array() = 1.0 / (1.0 + (-x).exp());
  const auto s = c.sig.array();
  const auto q = s * (1.0 - s);
  const auto t = 1.0 - 2.0 * s;
  c.d0.resize(a.rows(), a.cols());
  c.d0.array() = x * s;
  c.d1.resize(a.rows(), a.cols());
  c.d1.array() = s + x * q;
  if (up_to >= 2) {
    c.d2.resize(a.rows(), a.cols());
    c.d2.array() = q * (2.0 + x * t);
  }
  if (up_to >= 3) {
    c.d3.resize(a.rows(), a.cols());
    c.d3.array() = q * (t * (3.0 + x * t) - 2.0 * x * q);
  }
}

// Uniform cubic B-spline pieces in local coordinate u of cell s; same layout
// as bspline_local_into: out[k * 4 + r] is the k-th derivative of B_{s-3+r}.
void cubic_local(double u, double inv_h, int max_order, double* out) {
  const double w = 1.0 - u;
  const double u2 = u * u;
  const double u3 = u2 * u;
  out[0] = w * w * w / 6.0;
  out[1] = (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0;
  out[2] = (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0;
  out[3] = u3 / 6.0;
  if (max_order < 1) return;
  out[4] = -0.5 * w * w * inv_h;
  out[5] = (1.5 * u2 - 2.0 * u) * inv_h;
  out[6] = (-1.5 * u2 + u + 0.5) * inv_h;
  out[7] = 0.5 * u2 * inv_h;
  if (max_order < 2) return;
  const double h2 = inv_h * inv_h;
  out[8] = w * h2;
  out[9] = (3.0 * u - 2.0) * h2;
  out[10] = (1.0 - 3.0 * u) * h2;
  out[11] = u * h2;
  if (max_order < 3) return;
  const double h3 = h2 * inv_h;
  out[12] = -h3;
  out[13] = 3.0 * h3;
  out[14] = -3.0 * h3;
  out[15] = h3;
}

// Local basis derivatives (orders 0..max_order) for every (point, input)
// pair of a layer. first[r * in + i] is the index of the first local basis
// function, or kOutside when the input lies off the knot span.
constexpr int kOutside = std::numeric_limits<int>::min();

void local_basis(const KanConfig& config, std::span<const double> knots,
                 const Eigen::Ref<const Matrix>& x, int max_order, std::vector<int>& first,
                 std::vector<double>& local) {
  const int p = config.degree;
  const Eigen::Index n = x.rows();
  const Eigen::Index in = x.cols();
  const auto stride = static_cast<std::size_t>((max_order + 1) * (p + 1));
  first.assign(static_cast<std::size_t>(n * in), kOutside);
  local.assign(static_cast<std::size_t>(n * in) * stride, 0.0);
  const double t0 = knots.front();
  const double t_end = knots.back();
  const int cells = static_cast<int>(knots.size()) - 1;
  const double h = (t_end - t0) / cells;
  const double inv_h = 1.0 / h;
  const int nb = static_cast<int>(config.basis_per_edge());
  bool inside = false;
  for (Eigen::Index i = 0; i < in; ++i) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const double xv = x(r, i);
      if (!(xv >= t0 && xv < t_end)) continue;
      const auto slot = static_cast<std::size_t>(r * in + i);
      double* out = local.data() + slot * stride;
      int f = 0;
      if (p == 3) {
        const double pos = (xv - t0) * inv_h;
        const int s = std::clamp(static_cast<int>(pos), 0, cells - 1);
        cubic_local(std::clamp(pos - s, 0.0, 1.0), inv_h, max_order, out);
        f = s - p;
        for (int m = 0; m <= p; ++m) {
          if (f + m >= 0 && f + m < nb) continue;
          for (int k = 0; k <= max_order; ++k) out[k * (p + 1) + m] = 0.0;
        }
      } else {
        bspline_local_into(knots, p, xv, max_order, f, inside, std::span<double>(out, stride));
      }
      first[slot] = f;
    }
  }
}

}  // namespace

void kan_forward_batch(const KanConfig& config, std::span<const double> flat,
                       const JetBatch& input, KanCache& cache, JetBatch& out) {
  if (flat.size() != config.parameter_count()) {
    throw std::invalid_argument("kan_forward_batch: parameter vector has wrong length");
  }
  if (input.cols() != 2) throw std::invalid_argument("kan_forward_batch: input must have 2 columns");
  const auto shapes = config.layer_shapes();
  const std::vector<double> knots = config.knots();
  const int p = config.degree;
  const int nb = static_cast<int>(config.basis_per_edge());
  const std::size_t pe = config.params_per_edge();
  const int order = input.order;
  // Forward needs derivatives up to the jet order; the adjoint one more.
  const int max_order = order + 1;
  const auto stride = static_cast<std::size_t>((max_order + 1) * (p + 1));

  cache.layers.resize(shapes.size());
  const JetBatch* act = &input;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const auto [in, out_dim] = shapes[l];
    KanLayerCache& lc = cache.layers[l];
    lc.input = *act;
    const JetBatch& a = lc.input;
    const Eigen::Index n = a.n;

    lc.base_weights.resize(in, out_dim);
    lc.spline_matrix.resize(in * nb, out_dim);
    for (Eigen::Index i = 0; i < in; ++i) {
      for (Eigen::Index j = 0; j < out_dim; ++j) {
        const std::size_t e = offset + static_cast<std::size_t>(i * out_dim + j) * pe;
        const double ws = flat[e + static_cast<std::size_t>(nb) + 1];
        lc.base_weights(i, j) = flat[e + static_cast<std::size_t>(nb)];
        for (int m = 0; m < nb; ++m) lc.spline_matrix(i * nb + m, j) = ws * flat[e + static_cast<std::size_t>(m)];
      }
    }
    offset += static_cast<std::size_t>(in * out_dim) * pe;

    silu_derivs(a.v(), max_order, cache);
    autodiff::elementwise_forward(a, cache.d0, cache.d1, cache.d2, lc.silu);
    lc.silu_d1 = cache.d1;
    if (max_order >= 2) lc.silu_d2 = cache.d2;
    if (max_order >= 3) lc.silu_d3 = cache.d3;

    local_basis(config, knots, a.v(), max_order, lc.first, lc.local);
    lc.basis.resize(n, in * nb, order);
    lc.basis.data.setZero();
    for (Eigen::Index i = 0; i < in; ++i) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const auto slot = static_cast<std::size_t>(r * in + i);
        const int f = lc.first[slot];
        if (f == kOutside) continue;
        const double* b = lc.local.data() + slot * stride;
        for (int m = 0; m <= p; ++m) {
          const int idx = f + m;
          if (idx < 0 || idx >= nb) continue;
          const Eigen::Index c = i * nb + idx;
          lc.basis.data(r, c) = b[m];
          if (order == 0) continue;
          const double b1 = b[(p + 1) + m];
          const double ax = a.dx()(r, i);
          const double ay = a.dy()(r, i);
          lc.basis.data(n + r, c) = b1 * ax;
          lc.basis.data(2 * n + r, c) = b1 * ay;
          if (order == 1) continue;
          const double b2 = b[2 * (p + 1) + m];
          lc.basis.data(3 * n + r, c) = b2 * ax * ax + b1 * a.dxx()(r, i);
          lc.basis.data(4 * n + r, c) = b2 * ay * ay + b1 * a.dyy()(r, i);
        }
      }
    }

    JetBatch& z = l + 1 == shapes.size() ? out : cache.acts[l % 2];
    z.resize(n, out_dim, order);
    z.data.noalias() = lc.silu.data * lc.base_weights;
    z.data.noalias() += lc.basis.data * lc.spline_matrix;
    act = &z;
  }
}

void kan_backward_batch(const KanConfig& config, std::span<const double> flat, KanCache& cache,
                        const JetBatch& grad_out, std::span<double> grad) {
  if (grad.size() != flat.size() || flat.size() != config.parameter_count()) {
    throw std::invalid_argument("kan_backward_batch: gradient vector has wrong length");
  }
  const auto shapes = config.layer_shapes();
  if (cache.layers.size() != shapes.size()) {
    throw std::logic_error("kan_backward_batch: cache does not match configuration");
  }
  const int p = config.degree;
  const int nb = static_cast<int>(config.basis_per_edge());
  const std::size_t pe = config.params_per_edge();
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& [in, out] : shapes) {
    offsets.push_back(offset);
    offset += static_cast<std::size_t>(in * out) * pe;
  }

  JetBatch* g = &cache.grad_a;
  JetBatch* spare = &cache.grad_b;
  *g = grad_out;
  for (std::size_t l = shapes.size(); l-- > 0;) {
    const auto [in, out] = shapes[l];
    const KanLayerCache& lc = cache.layers[l];
    const JetBatch& a = lc.input;
    const Eigen::Index n = a.n;
    const int order = a.order;
    const int max_order = order + 1;
    const auto stride = static_cast<std::size_t>((max_order + 1) * (p + 1));

    cache.g_wb.noalias() = lc.silu.data.transpose() * g->data;
    cache.g_spline.noalias() = lc.basis.data.transpose() * g->data;
    const std::size_t o = offsets[l];
    for (Eigen::Index i = 0; i < in; ++i) {
      for (Eigen::Index j = 0; j < out; ++j) {
        const std::size_t e = o + static_cast<std::size_t>(i * out + j) * pe;
        const double ws = flat[e + static_cast<std::size_t>(nb) + 1];
        double g_ws = 0.0;
        for (int m = 0; m < nb; ++m) {
          const double gm = cache.g_spline(i * nb + m, j);
          grad[e + static_cast<std::size_t>(m)] += ws * gm;
          g_ws += flat[e + static_cast<std::size_t>(m)] * gm;
        }
        grad[e + static_cast<std::size_t>(nb)] += cache.g_wb(i, j);
        grad[e + static_cast<std::size_t>(nb) + 1] += g_ws;
      }
    }
    if (l == 0) break;

    // Base path, then the spline path added point by point.
    cache.g_silu.resize(n, in, order);
    cache.g_silu.data.noalias() = g->data * lc.base_weights.transpose();
    autodiff::elementwise_backward(a, cache.g_silu, lc.silu_d1, lc.silu_d2, lc.silu_d3, *spare);
    cache.g_basis.noalias() = g->data * lc.spline_matrix.transpose();
    Matrix& gb = cache.g_basis;
    Matrix& gi = spare->data;
    for (Eigen::Index i = 0; i < in; ++i) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const auto slot = static_cast<std::size_t>(r * in + i);
        const int f = lc.first[slot];
        if (f == kOutside) continue;
        const double* b = lc.local.data() + slot * stride;
        double gv = 0.0;
        double gx = 0.0;
        double gy = 0.0;
        double gxx = 0.0;
        double gyy = 0.0;
        for (int m = 0; m <= p; ++m) {
          const int idx = f + m;
          if (idx < 0 || idx >= nb) continue;
          const Eigen::Index c = i * nb + idx;
          const double b1 = b[(p + 1) + m];
          gv += gb(r, c) * b1;
          if (order == 0) continue;
          const double b2 = b[2 * (p + 1) + m];
          const double ax = a.dx()(r, i);
          const double ay = a.dy()(r, i);
          const double ux = gb(n + r, c);
          const double uy = gb(2 * n + r, c);
          gx += ux * b1;
          gy += uy * b1;
          if (order == 1) {
            gv += (ux * ax + uy * ay) * b2;
            continue;
          }
          const double b3 = b[3 * (p + 1) + m];
          const double uxx = gb(3 * n + r, c);
          const double uyy = gb(4 * n + r, c);
          gv += (ux * ax + uy * ay + uxx * a.dxx()(r, i) + uyy * a.dyy()(r, i)) * b2 +
                (uxx * ax * ax + uyy * ay * ay) * b3;
          gx += 2.0 * uxx * b2 * ax;
          gy += 2.0 * uyy * b2 * ay;
          gxx += uxx * b1;
          gyy += uyy * b1;
        }
        gi(r, i) += gv;
        if (order == 0) continue;
        gi(n + r, i) += gx;
        gi(2 * n + r, i) += gy;
        if (order == 1) continue;
        gi(3 * n + r, i) += gxx;
        gi(4 * n + r, i) += gyy;
      }
    }
    std::swap(g, spare);
  }
}

}  // namespace unbounded::networks
