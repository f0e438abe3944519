#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace unbounded::sampling {

enum class PointKind { collocation, observation, boundary };

std::string_view kind_name(PointKind kind);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Sampled points plus the parameters that regenerate them.
struct PointSet {
  std::vector<double> xs;
  std::vector<double> ys;
  PointKind kind = PointKind::collocation;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return xs.size(); }
  bool empty() const noexcept { return xs.empty(); }
  Point operator[](std::size_t i) const { return {xs[i], ys[i]}; }
};

struct Box {
  double x_lo = -3.0;
  double x_hi = 3.0;
  double y_lo = -3.0;
  double y_hi = 3.0;

  bool contains(double x, double y) const noexcept {
    return x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi;
  }
};

/// x ~ N(mean_x, sigma_x^2), y ~ N(mean_y, sigma_y^2), independent.
PointSet sample_infinite(std::size_t n, Point mean, Point sigma, std::uint64_t seed);

/// x ~ N(mean_x, sigma_x^2), y ~ Exp(rate_y); every y >= 0.
PointSet sample_semi_infinite(std::size_t n, double mean_x, double sigma_x, double rate_y,
                              std::uint64_t seed);

/// Uniform in the box; kind = observation.
PointSet sample_uniform_box(std::size_t n, const Box& bounds, std::uint64_t seed);

/// x ~ U(x_lo, x_hi), y = 0; kind = boundary.
PointSet sample_boundary(std::size_t n, double x_lo, double x_hi, std::uint64_t seed);

/// v'_i = v_i + eta_i with eta_i ~ N(0, (percent/100 * RMS(values))^2).
/// percent = 0 returns the input unchanged.
std::vector<double> add_noise(std::span<const double> values, double percent, std::uint64_t seed);

/// CSV with header `x,y,kind,seed` and 17 significant digits.
void write_csv(const PointSet& set, const std::filesystem::path& path);

}  // namespace unbounded::sampling
