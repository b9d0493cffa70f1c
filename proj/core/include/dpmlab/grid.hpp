#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpmlab {

enum class QuadratureRule { Midpoint, Trapezoid };

class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor grid on a box. Flat indices are row-major with axis 0 slowest.
struct GridSpec {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> counts;
  QuadratureRule rule = QuadratureRule::Midpoint;

  static constexpr int kMinPointsPerAxis = 16;
  static constexpr std::size_t kMaxPoints = std::size_t{1} << 24;

  static GridSpec cube(int dimension, double radius, int points_per_axis,
                       QuadratureRule rule = QuadratureRule::Midpoint);
  // 2^10 points per axis for d <= 2 and 2^6 for d = 3.
  static int default_points_per_axis(int dimension);

  void validate() const;
  int dimension() const { return static_cast<int>(counts.size()); }
  std::size_t size() const;
  double spacing(int axis) const;
  double coordinate(int axis, int index) const;
  double axis_weight(int axis, int index) const;
  void point(std::size_t flat, std::span<double> out) const;
  double weight(std::size_t flat) const;
  std::size_t stride(int axis) const;
};

using PointFunction = std::function<double(std::span<const double>)>;

std::vector<double> sample_on_grid(const GridSpec& grid, const PointFunction& f);
double integrate(const GridSpec& grid, std::span<const double> values);

// Convolution with the centred normal kernel of per-axis standard deviation
// `kernel_sd`, treating values outside the box as zero. A zero entry leaves
// that axis untouched. Throws ResolutionError when a positive sd is below half
// the grid spacing.
std::vector<double> gaussian_smooth(const GridSpec& grid, std::span<const double> values,
                                    std::span<const double> kernel_sd);

}  // namespace dpmlab
