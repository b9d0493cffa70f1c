#include "dpmlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include <fftw3.h>

namespace dpmlab {

GridSpec GridSpec::cube(int dimension, double radius, int points_per_axis, QuadratureRule rule) {
  GridSpec g;
  g.lower.assign(static_cast<std::size_t>(dimension), -radius);
  g.upper.assign(static_cast<std::size_t>(dimension), radius);
  g.counts.assign(static_cast<std::size_t>(dimension), points_per_axis);
  g.rule = rule;
  g.validate();
  return g;
}

int GridSpec::default_points_per_axis(int dimension) { return dimension <= 2 ? 1024 : 64; }

void GridSpec::validate() const {
  if (counts.empty()) throw std::invalid_argument("GridSpec: dimension must be >= 1");
  if (lower.size() != counts.size() || upper.size() != counts.size())
    throw std::invalid_argument("GridSpec: bounds and counts differ in length");
  std::size_t total = 1;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (!std::isfinite(lower[j]) || !std::isfinite(upper[j]) || !(upper[j] > lower[j]))
      throw std::invalid_argument("GridSpec: bounds must be finite with upper > lower");
    if (counts[j] < kMinPointsPerAxis) throw std::invalid_argument("GridSpec: fewer than 16 points on an axis");
    total *= static_cast<std::size_t>(counts[j]);
    if (total > kMaxPoints) throw std::invalid_argument("GridSpec: more than 2^24 points");
  }
}

std::size_t GridSpec::size() const {
  std::size_t total = 1;
  for (int c : counts) total *= static_cast<std::size_t>(c);
  return total;
}

double GridSpec::spacing(int axis) const {
  const auto j = static_cast<std::size_t>(axis);
  const double width = upper[j] - lower[j];
  return rule == QuadratureRule::Midpoint ? width / counts[j] : width / (counts[j] - 1);
}

double GridSpec::coordinate(int axis, int index) const {
  const double h = spacing(axis);
  const double base = lower[static_cast<std::size_t>(axis)];
  return rule == QuadratureRule::Midpoint ? base + (index + 0.5) * h : base + index * h;
}

double GridSpec::axis_weight(int axis, int index) const {
  const double h = spacing(axis);
  if (rule == QuadratureRule::Trapezoid && (index == 0 || index == counts[static_cast<std::size_t>(axis)] - 1))
    return 0.5 * h;
  return h;
}

std::size_t GridSpec::stride(int axis) const {
  std::size_t s = 1;
  for (std::size_t j = static_cast<std::size_t>(axis) + 1; j < counts.size(); ++j)
    s *= static_cast<std::size_t>(counts[j]);
  return s;
}

void GridSpec::point(std::size_t flat, std::span<double> out) const {
  for (int j = dimension() - 1; j >= 0; --j) {
    const auto n = static_cast<std::size_t>(counts[static_cast<std::size_t>(j)]);
    out[static_cast<std::size_t>(j)] = coordinate(j, static_cast<int>(flat % n));
    flat /= n;
  }
}

double GridSpec::weight(std::size_t flat) const {
  double w = 1.0;
  for (int j = dimension() - 1; j >= 0; --j) {
    const auto n = static_cast<std::size_t>(counts[static_cast<std::size_t>(j)]);
    w *= axis_weight(j, static_cast<int>(flat % n));
    flat /= n;
  }
  return w;
}

std::vector<double> sample_on_grid(const GridSpec& grid, const PointFunction& f) {
  std::vector<double> out(grid.size());
  std::vector<double> x(static_cast<std::size_t>(grid.dimension()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    grid.point(i, x);
    out[i] = f(x);
  }
  return out;
}

double integrate(const GridSpec& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw std::invalid_argument("integrate: size mismatch");
  if (grid.rule == QuadratureRule::Midpoint) {
    double cell = 1.0;
    for (int j = 0; j < grid.dimension(); ++j) cell *= grid.spacing(j);
    double s = 0.0;
    for (double v : values) s += v;
    return s * cell;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += grid.weight(i) * values[i];
  return s;
}

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

// Linear convolution of every line along one axis with a sampled normal kernel.
void smooth_axis(const GridSpec& grid, std::vector<double>& data, int axis, double sd) {
  const int n = grid.counts[static_cast<std::size_t>(axis)];
  const double h = grid.spacing(axis);
  const int half = std::min(n - 1, static_cast<int>(std::ceil(12.0 * sd / h)));
  const int len = n + half + 1;
  const int spec = len / 2 + 1;

  std::unique_ptr<double, FftwDeleter> buf(fftw_alloc_real(static_cast<std::size_t>(len)));
  std::unique_ptr<fftw_complex, FftwDeleter> kf(fftw_alloc_complex(static_cast<std::size_t>(spec)));
  std::unique_ptr<fftw_complex, FftwDeleter> lf(fftw_alloc_complex(static_cast<std::size_t>(spec)));

  fftw_plan fwd, bwd;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(len, buf.get(), lf.get(), FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(len, lf.get(), buf.get(), FFTW_ESTIMATE);
  }

  std::fill(buf.get(), buf.get() + len, 0.0);
  const bool full_support = half == static_cast<int>(std::ceil(12.0 * sd / h));
  double mass = 0.0;
  for (int t = -half; t <= half; ++t) {
    const double u = t * h / sd;
    mass += std::exp(-0.5 * u * u);
  }
  // A complete sampled kernel is normalized to unit sum so that discrete mass is
  // never created; a kernel cut by the box keeps its analytic scale.
  const double norm = full_support ? 1.0 / mass : h / (std::sqrt(2.0 * std::numbers::pi) * sd);
  for (int t = -half; t <= half; ++t) {
    const double u = t * h / sd;
    buf.get()[(t + len) % len] = norm * std::exp(-0.5 * u * u);
  }
  fftw_execute_dft_r2c(fwd, buf.get(), kf.get());

  const std::size_t stride = grid.stride(axis);
  const std::size_t lines = grid.size() / static_cast<std::size_t>(n);
  for (std::size_t line = 0; line < lines; ++line) {
    const std::size_t outer = line / stride;
    const std::size_t inner = line % stride;
    const std::size_t base = outer * stride * static_cast<std::size_t>(n) + inner;
    std::fill(buf.get(), buf.get() + len, 0.0);
    for (int i = 0; i < n; ++i) buf.get()[i] = data[base + static_cast<std::size_t>(i) * stride];
    fftw_execute_dft_r2c(fwd, buf.get(), lf.get());
    for (int k = 0; k < spec; ++k) {
      const std::complex<double> a(lf.get()[k][0], lf.get()[k][1]);
      const std::complex<double> b(kf.get()[k][0], kf.get()[k][1]);
      const std::complex<double> c = a * b;
      lf.get()[k][0] = c.real();
      lf.get()[k][1] = c.imag();
    }
    fftw_execute_dft_c2r(bwd, lf.get(), buf.get());
    for (int i = 0; i < n; ++i) data[base + static_cast<std::size_t>(i) * stride] = buf.get()[i] / len;
  }

  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);
}

}  // namespace

std::vector<double> gaussian_smooth(const GridSpec& grid, std::span<const double> values,
                                    std::span<const double> kernel_sd) {
  grid.validate();
  if (values.size() != grid.size()) throw std::invalid_argument("gaussian_smooth: size mismatch");
  if (kernel_sd.size() != static_cast<std::size_t>(grid.dimension()))
    throw std::invalid_argument("gaussian_smooth: kernel dimension mismatch");
  for (int j = 0; j < grid.dimension(); ++j) {
    const double sd = kernel_sd[static_cast<std::size_t>(j)];
    if (sd < 0.0 || !std::isfinite(sd)) throw std::invalid_argument("gaussian_smooth: invalid kernel sd");
    if (sd > 0.0 && sd < 0.5 * grid.spacing(j)) {
      std::ostringstream os;
      os << "gaussian_smooth: kernel sd " << sd << " on axis " << j << " is below half the grid spacing "
         << grid.spacing(j);
      throw ResolutionError(os.str());
    }
  }
  std::vector<double> out(values.begin(), values.end());
  for (int j = 0; j < grid.dimension(); ++j) {
    const double sd = kernel_sd[static_cast<std::size_t>(j)];
    if (sd > 0.0) smooth_axis(grid, out, j, sd);
  }
  return out;
}

}  // namespace dpmlab
