#include "unbounded/sampling.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <stdexcept>

namespace unbounded::sampling {

std::string_view kind_name(PointKind kind) {
  switch (kind) {
    case PointKind::collocation: return "collocation";
    case PointKind::observation: return "observation";
    case PointKind::boundary: return "boundary";
  }
  return "unknown";
}

namespace {

void require_points(std::size_t n) {
  if (n == 0) throw std::invalid_argument("sampler: n must be positive");
}

PointSet make(std::size_t n, PointKind kind, std::uint64_t seed) {
  PointSet s;
  s.kind = kind;
  s.seed = seed;
  s.xs.reserve(n);
  s.ys.reserve(n);
  return s;
}

}  // namespace

PointSet sample_infinite(std::size_t n, Point mean, Point sigma, std::uint64_t seed) {
  require_points(n);
  if (!(sigma.x > 0.0) || !(sigma.y > 0.0)) {
    throw std::invalid_argument("sample_infinite: sigma must be positive");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nx(mean.x, sigma.x);
  std::normal_distribution<double> ny(mean.y, sigma.y);
  PointSet s = make(n, PointKind::collocation, seed);
  for (std::size_t i = 0; i < n; ++i) {
    s.xs.push_back(nx(rng));
    s.ys.push_back(ny(rng));
  }
  return s;
}

PointSet sample_semi_infinite(std::size_t n, double mean_x, double sigma_x, double rate_y,
                              std::uint64_t seed) {
  require_points(n);
  if (!(sigma_x > 0.0)) throw std::invalid_argument("sample_semi_infinite: sigma must be positive");
  if (!(rate_y > 0.0)) throw std::invalid_argument("sample_semi_infinite: rate must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nx(mean_x, sigma_x);
  std::exponential_distribution<double> ey(rate_y);
  PointSet s = make(n, PointKind::collocation, seed);
  for (std::size_t i = 0; i < n; ++i) {
    s.xs.push_back(nx(rng));
    s.ys.push_back(ey(rng));
  }
  return s;
}

PointSet sample_uniform_box(std::size_t n, const Box& b, std::uint64_t seed) {
  require_points(n);
  if (!(b.x_lo < b.x_hi) || !(b.y_lo < b.y_hi)) {
    throw std::invalid_argument("sample_uniform_box: bounds must satisfy lo < hi");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(b.x_lo, b.x_hi);
  std::uniform_real_distribution<double> uy(b.y_lo, b.y_hi);
  PointSet s = make(n, PointKind::observation, seed);
  for (std::size_t i = 0; i < n; ++i) {
    s.xs.push_back(ux(rng));
    s.ys.push_back(uy(rng));
  }
  return s;
}

PointSet sample_boundary(std::size_t n, double x_lo, double x_hi, std::uint64_t seed) {
  require_points(n);
  if (!(x_lo < x_hi)) throw std::invalid_argument("sample_boundary: bounds must satisfy lo < hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(x_lo, x_hi);
  PointSet s = make(n, PointKind::boundary, seed);
  for (std::size_t i = 0; i < n; ++i) {
    s.xs.push_back(ux(rng));
    s.ys.push_back(0.0);
  }
  return s;
}

std::vector<double> add_noise(std::span<const double> values, double percent, std::uint64_t seed) {
  if (!(percent >= 0.0)) throw std::invalid_argument("add_noise: percent must be >= 0");
  std::vector<double> out(values.begin(), values.end());
  if (percent == 0.0 || values.empty()) return out;
  double ss = 0.0;
  for (double v : values) ss += v * v;
  const double rms = std::sqrt(ss / static_cast<double>(values.size()));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, percent / 100.0 * rms);
  for (double& v : out) v += noise(rng);
  return out;
}

void write_csv(const PointSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path.string());
  out << "x,y,kind,seed\n" << std::setprecision(17);
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << set.xs[i] << ',' << set.ys[i] << ',' << kind_name(set.kind) << ',' << set.seed << '\n';
  }
}

}  // namespace unbounded::sampling
