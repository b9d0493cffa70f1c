#include "dpmlab/test_densities.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace dpmlab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

// P(lo < Z < hi) without cancellation in either tail.
double normal_interval(double lo, double hi) {
  if (lo > 0.0) return 0.5 * (std::erfc(lo / std::numbers::sqrt2) - std::erfc(hi / std::numbers::sqrt2));
  if (hi < 0.0) return 0.5 * (std::erfc(-hi / std::numbers::sqrt2) - std::erfc(-lo / std::numbers::sqrt2));
  return 1.0 - 0.5 * std::erfc(hi / std::numbers::sqrt2) - 0.5 * std::erfc(-lo / std::numbers::sqrt2);
}

// Partial moments E[Z^j 1{lo < Z < hi}] for j = 0..order.
void truncated_normal_moments(double lo, double hi, int order, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(order) + 1, 0.0);
  const double plo = std::isfinite(lo) ? normal_pdf(lo) : 0.0;
  const double phi = std::isfinite(hi) ? normal_pdf(hi) : 0.0;
  out[0] = normal_interval(lo, hi);
  if (order >= 1) out[1] = plo - phi;
  double lo_pow = 1.0, hi_pow = 1.0;  // lo^{j-1}, hi^{j-1}
  for (int j = 2; j <= order; ++j) {
    lo_pow = (j == 2) ? lo : lo_pow * lo;
    hi_pow = (j == 2) ? hi : hi_pow * hi;
    const double edge_lo = plo == 0.0 ? 0.0 : lo_pow * plo;
    const double edge_hi = phi == 0.0 ? 0.0 : hi_pow * phi;
    out[static_cast<std::size_t>(j)] = (j - 1) * out[static_cast<std::size_t>(j) - 2] + edge_lo - edge_hi;
  }
}

// sup_{t >= 0} (t + q)^r exp(-t^2 / 4)
double hermite_envelope_constant(int r, double q) {
  const double t = 0.5 * (-q + std::sqrt(q * q + 8.0 * r));
  return std::pow(t + q, r) * std::exp(-0.25 * t * t);
}

double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

// Mixed-radix Hermite recursion: writes D^k phi_Sigma(v) / phi_Sigma(v) for every
// index dominated by k into `table`; returns the entry for k itself.
double hermite_factor(const MultiIndex& k, const Eigen::VectorXd& u, const Eigen::MatrixXd& precision,
                      std::vector<double>& table) {
  const int d = k.dimension();
  std::vector<std::size_t> stride(static_cast<std::size_t>(d));
  std::size_t size = 1;
  for (int j = d - 1; j >= 0; --j) {
    stride[static_cast<std::size_t>(j)] = size;
    size *= static_cast<std::size_t>(k[j] + 1);
  }
  table.assign(size, 0.0);
  table[0] = 1.0;
  std::vector<int> m(static_cast<std::size_t>(d), 0);
  for (std::size_t flat = 1; flat < size; ++flat) {
    for (int j = d - 1; j >= 0; --j) {  // odometer increment
      auto& e = m[static_cast<std::size_t>(j)];
      if (e < k[j]) {
        ++e;
        break;
      }
      e = 0;
    }
    int i = d - 1;
    while (m[static_cast<std::size_t>(i)] == 0) --i;
    const std::size_t parent = flat - stride[static_cast<std::size_t>(i)];
    double h = u[i] * table[parent];
    for (int j = 0; j < d; ++j) {
      int pj = m[static_cast<std::size_t>(j)] - (j == i ? 1 : 0);
      if (pj > 0) h -= pj * precision(i, j) * table[parent - stride[static_cast<std::size_t>(j)]];
    }
    table[flat] = h;
  }
  return table[size - 1];
}

}  // namespace

std::vector<double> DifferentiableFunction::derivative_on_grid(const MultiIndex& k, const GridSpec& grid) const {
  std::vector<double> out(grid.size());
  std::vector<double> x(static_cast<std::size_t>(grid.dimension()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    grid.point(i, x);
    out[i] = derivative(k, x);
  }
  return out;
}

void accumulate_separable(const GridSpec& grid, double coefficient,
                          const std::vector<std::vector<double>>& factors, std::vector<double>& out) {
  const int d = grid.dimension();
  if (static_cast<int>(factors.size()) != d || out.size() != grid.size())
    throw std::invalid_argument("accumulate_separable: shape mismatch");
  if (coefficient == 0.0) return;
  if (d == 1) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += coefficient * factors[0][i];
    return;
  }
  // Prefix products over all but the last axis, then a contiguous inner loop.
  const auto inner = static_cast<std::size_t>(grid.counts.back());
  const auto& last = factors.back();
  std::vector<int> index(static_cast<std::size_t>(d) - 1, 0);
  for (std::size_t base = 0; base < out.size(); base += inner) {
    double prefix = coefficient;
    for (int j = 0; j < d - 1; ++j) prefix *= factors[static_cast<std::size_t>(j)][static_cast<std::size_t>(index[static_cast<std::size_t>(j)])];
    if (prefix != 0.0)
      for (std::size_t i = 0; i < inner; ++i) out[base + i] += prefix * last[i];
    for (int j = d - 2; j >= 0; --j) {
      if (++index[static_cast<std::size_t>(j)] < grid.counts[static_cast<std::size_t>(j)]) break;
      index[static_cast<std::size_t>(j)] = 0;
    }
  }
}

namespace {

// r-th derivative of the N(0, sd^2) density along one axis.
double normal_derivative_1d(int r, double x, double sd) {
  const double t = x / sd;
  double he_prev = 1.0, he = t;  // probabilists' Hermite polynomials
  if (r == 0) he = 1.0;
  for (int j = 2; j <= r; ++j) {
    const double next = t * he - (j - 1) * he_prev;
    he_prev = he;
    he = next;
  }
  const double sign = (r % 2) ? -1.0 : 1.0;
  return sign * he * normal_pdf(t) / std::pow(sd, r + 1);
}

std::vector<double> axis_coordinates(const GridSpec& grid, int axis) {
  std::vector<double> c(static_cast<std::size_t>(grid.counts[static_cast<std::size_t>(axis)]));
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = grid.coordinate(axis, static_cast<int>(i));
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Gaussian location mixtures

GaussianMixtureDensity::GaussianMixtureDensity(MixingMeasure mixing, CovarianceSpec covariance)
    : mixing_(std::move(mixing)), covariance_(std::move(covariance)) {
  mixing_.validate(1e-9);
  if (mixing_.dimension() != covariance_.dimension())
    throw std::invalid_argument("GaussianMixtureDensity: atom and covariance dimensions differ");
  normalizer_ = std::exp(-0.5 * (covariance_.dimension() * kLog2Pi + covariance_.log_det()));
}

double GaussianMixtureDensity::evaluate(std::span<const double> x) const {
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  double s = 0.0;
  for (std::size_t h = 0; h < mixing_.size(); ++h) {
    if (mixing_.weights[h] == 0.0) continue;
    s += mixing_.weights[h] * std::exp(-0.5 * covariance_.mahalanobis_squared(xv - mixing_.atoms[h]));
  }
  return normalizer_ * s;
}

bool GaussianMixtureDensity::supports_derivative(const MultiIndex& k) const {
  return k.dimension() == dimension() && k.order() <= kMaxDerivativeOrder;
}

double GaussianMixtureDensity::derivative(const MultiIndex& k, std::span<const double> x) const {
  if (!supports_derivative(k))
    throw UnsupportedOrder("GaussianMixtureDensity: derivative " + k.to_string() + " unavailable");
  if (k.order() == 0) return evaluate(x);
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::MatrixXd& precision = covariance_.inverse();
  std::vector<double> table;
  double s = 0.0;
  for (std::size_t h = 0; h < mixing_.size(); ++h) {
    if (mixing_.weights[h] == 0.0) continue;
    const Eigen::VectorXd v = xv - mixing_.atoms[h];
    const double density = std::exp(-0.5 * v.dot(precision * v));
    if (density == 0.0) continue;
    const Eigen::VectorXd u = -(precision * v);
    s += mixing_.weights[h] * density * hermite_factor(k, u, precision, table);
  }
  return normalizer_ * s;
}

std::vector<double> GaussianMixtureDensity::derivative_on_grid(const MultiIndex& k, const GridSpec& grid) const {
  if (!covariance_.is_diagonal()) return DifferentiableFunction::derivative_on_grid(k, grid);
  if (!supports_derivative(k))
    throw UnsupportedOrder("GaussianMixtureDensity: derivative " + k.to_string() + " unavailable");
  const int d = dimension();
  std::vector<double> out(grid.size(), 0.0);
  std::vector<std::vector<double>> factors(static_cast<std::size_t>(d));
  for (std::size_t h = 0; h < mixing_.size(); ++h) {
    if (mixing_.weights[h] == 0.0) continue;
    for (int j = 0; j < d; ++j) {
      const double sd = std::sqrt(covariance_.matrix()(j, j));
      auto& f = factors[static_cast<std::size_t>(j)];
      f = axis_coordinates(grid, j);
      for (double& x : f) x = normal_derivative_1d(k[j], x - mixing_.atoms[h][j], sd);
    }
    accumulate_separable(grid, mixing_.weights[h], factors, out);
  }
  return out;
}

std::string GaussianMixtureDensity::id() const {
  std::ostringstream os;
  os << "gaussian_mixture(d=" << dimension() << ",atoms=" << mixing_.size() << ")";
  return os.str();
}

Json GaussianMixtureDensity::describe() const {
  Json doc;
  doc["kind"] = "gaussian_mixture";
  Json atoms = Json::array();
  for (const auto& z : mixing_.atoms) atoms.push_back(std::vector<double>(z.data(), z.data() + z.size()));
  doc["atoms"] = std::move(atoms);
  doc["weights"] = mixing_.weights;
  Json cov = Json::array();
  for (int i = 0; i < dimension(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(dimension()));
    for (int j = 0; j < dimension(); ++j) row[static_cast<std::size_t>(j)] = covariance_.matrix()(i, j);
    cov.push_back(row);
  }
  doc["covariance"] = std::move(cov);
  return doc;
}

double GaussianMixtureDensity::envelope(std::span<const double> x, double beta) const {
  if (!(beta > 0.0)) throw std::invalid_argument("envelope: beta must be positive");
  const int d = dimension();
  const int r = std::isfinite(beta) ? strict_floor(beta) + 1 : 1;
  const double lmin = covariance_.eigenvalues()[0];
  const double lmax = covariance_.eigenvalues()[d - 1];
  const double scale = std::sqrt(static_cast<double>(d)) * normalizer_ * std::pow(lmin, -0.5 * r) *
                       hermite_envelope_constant(r, std::sqrt(static_cast<double>(d + 2 * r)));
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  double s = 0.0;
  for (std::size_t h = 0; h < mixing_.size(); ++h)
    s += mixing_.weights[h] * std::exp(-(xv - mixing_.atoms[h]).squaredNorm() / (8.0 * lmax));
  return scale * s;
}

double GaussianMixtureDensity::tau0() const {
  return 1.0 / (4.0 * covariance_.eigenvalues()[dimension() - 1]);
}

TailParameters GaussianMixtureDensity::tail() const {
  double radius = 0.0;
  for (const auto& z : mixing_.atoms) radius = std::max(radius, z.norm());
  const double lmax = covariance_.eigenvalues()[dimension() - 1];
  // ||x|| > 2R implies ||x - z|| >= ||x|| / 2.
  return {std::max(2.0 * radius, 1.0), 1.0 / (8.0 * lmax), normalizer_, 2.0};
}

Eigen::VectorXd GaussianMixtureDensity::sample(Rng& rng) const {
  const double u = draw_uniform(rng);
  double acc = 0.0;
  std::size_t pick = mixing_.size() - 1;
  for (std::size_t h = 0; h < mixing_.size(); ++h) {
    acc += mixing_.weights[h];
    if (u < acc) {
      pick = h;
      break;
    }
  }
  return mixing_.atoms[pick] + covariance_.transform_standard(draw_standard_normal_vector(rng, dimension()));
}

double GaussianMixtureDensity::marginal_cdf(int axis, double t) const {
  const double sd = std::sqrt(covariance_.matrix()(axis, axis));
  double s = 0.0;
  for (std::size_t h = 0; h < mixing_.size(); ++h)
    s += mixing_.weights[h] * normal_cdf((t - mixing_.atoms[h][axis]) / sd);
  return s;
}

double GaussianMixtureDensity::tail_radius(double level) const {
  double radius = 0.0;
  for (const auto& z : mixing_.atoms) radius = std::max(radius, z.norm());
  const double lmax = covariance_.eigenvalues()[dimension() - 1];
  if (normalizer_ <= level) return radius + std::sqrt(lmax);
  return radius + std::sqrt(2.0 * lmax * std::log(normalizer_ / level));
}

std::shared_ptr<const DifferentiableFunction> GaussianMixtureDensity::smoothed(
    std::span<const double> kernel_sd) const {
  Eigen::VectorXd extra(dimension());
  for (int j = 0; j < dimension(); ++j) extra[j] = kernel_sd[static_cast<std::size_t>(j)] * kernel_sd[static_cast<std::size_t>(j)];
  return std::make_shared<GaussianMixtureDensity>(mixing_, covariance_.plus_diagonal(extra));
}

// ---------------------------------------------------------------------------
// Cardinal B-spline marginals

struct SplineDensity::Axis {
  int degree = 1;
  double scale = 1.0;
  double left = 0.0;  // first knot
  // coefficients[r][j][l]: r-th derivative on interval j in powers of (x - knot_j)
  std::vector<std::vector<std::vector<double>>> coefficients;
  std::vector<std::vector<double>> antiderivative;  // degree + 2 coefficients per interval
  std::vector<double> cumulative;                   // mass left of each knot
  std::vector<double> sup_abs;                      // sup |B^(r)| for r = 0..degree

  Axis(int m, double u) : degree(m), scale(u) {
    const int n = m + 1;
    left = -0.5 * n * u;
    // On y in [j, j+1] the Irwin-Hall density is sum_{i<=j} (-1)^i C(n,i) (y-i)^m / m!.
    coefficients.assign(static_cast<std::size_t>(m) + 1,
                        std::vector<std::vector<double>>(static_cast<std::size_t>(n)));
    for (int j = 0; j < n; ++j) {
      std::vector<Rational> local(static_cast<std::size_t>(m) + 1, Rational(0));
      for (int i = 0; i <= j; ++i) {
        const Rational sign = (i % 2 ? -1 : 1) * Rational(static_cast<long long>(binomial(n, i)));
        for (int l = 0; l <= m; ++l) {
          Rational term = sign * Rational(static_cast<long long>(binomial(m, l)));
          for (int p = 0; p < m - l; ++p) term *= (j - i);
          local[static_cast<std::size_t>(l)] += term;
        }
      }
      Rational mfact = 1;
      for (int p = 2; p <= m; ++p) mfact *= p;
      auto& c0 = coefficients[0][static_cast<std::size_t>(j)];
      c0.resize(static_cast<std::size_t>(m) + 1);
      // y - j = s / u, and the x-density carries a 1/u Jacobian.
      for (int l = 0; l <= m; ++l)
        c0[static_cast<std::size_t>(l)] =
            static_cast<double>(local[static_cast<std::size_t>(l)] / mfact) / std::pow(u, l + 1);
      for (int r = 1; r <= m; ++r) {
        const auto& prev = coefficients[static_cast<std::size_t>(r) - 1][static_cast<std::size_t>(j)];
        auto& cur = coefficients[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
        cur.assign(prev.size() - 1, 0.0);
        for (std::size_t l = 1; l < prev.size(); ++l) cur[l - 1] = prev[l] * static_cast<double>(l);
      }
    }
    antiderivative.resize(static_cast<std::size_t>(n));
    cumulative.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (int j = 0; j < n; ++j) {
      const auto& c = coefficients[0][static_cast<std::size_t>(j)];
      auto& a = antiderivative[static_cast<std::size_t>(j)];
      a.assign(c.size() + 1, 0.0);
      for (std::size_t l = 0; l < c.size(); ++l) a[l + 1] = c[l] / static_cast<double>(l + 1);
      cumulative[static_cast<std::size_t>(j) + 1] = cumulative[static_cast<std::size_t>(j)] + horner(a, u);
    }
    sup_abs.assign(static_cast<std::size_t>(m) + 1, 0.0);
    constexpr int kProbe = 4000;
    for (int r = 0; r <= m; ++r)
      for (int j = 0; j < n; ++j)
        for (int p = 0; p <= kProbe; ++p) {
          const double v = horner(coefficients[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)], u * p / kProbe);
          sup_abs[static_cast<std::size_t>(r)] = std::max(sup_abs[static_cast<std::size_t>(r)], std::abs(v));
        }
    // Dense probing can miss an interior extremum by O(probe spacing^2).
    for (auto& s : sup_abs) s *= 1.0 + 1e-6;
  }

  static double horner(const std::vector<double>& c, double s) {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * s + *it;
    return v;
  }

  int intervals() const { return degree + 1; }
  double knot(int j) const { return left + j * scale; }

  double value(int r, double x) const {
    const double pos = (x - left) / scale;
    if (!(pos >= 0.0) || pos >= intervals()) return 0.0;
    const int j = std::min(static_cast<int>(pos), intervals() - 1);
    return horner(coefficients[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)], x - knot(j));
  }

  double cdf(double x) const {
    const double pos = (x - left) / scale;
    if (pos <= 0.0) return 0.0;
    if (pos >= intervals()) return 1.0;
    const int j = std::min(static_cast<int>(pos), intervals() - 1);
    return cumulative[static_cast<std::size_t>(j)] +
           horner(antiderivative[static_cast<std::size_t>(j)], x - knot(j));
  }

  // Integral of B^(r)(z) phi_sd(x - z) dz, piece by piece with Taylor shifts.
  double smoothed(int r, double x, double sd) const {
    if (sd == 0.0) return value(r, x);
    std::vector<double> moments;
    std::vector<double> taylor;
    double total = 0.0;
    for (int j = 0; j < intervals(); ++j) {
      const double a = knot(j), b = knot(j + 1);
      const double lo = (a - x) / sd, hi = (b - x) / sd;
      if (lo > 40.0 || hi < -40.0) continue;
      // Taylor coefficients of the piece about x, in powers of (z - x).
      taylor = coefficients[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
      const double shift = x - a;
      const int deg = static_cast<int>(taylor.size()) - 1;
      for (int i = 0; i < deg; ++i)
        for (int l = deg - 1; l >= i; --l) taylor[static_cast<std::size_t>(l)] += shift * taylor[static_cast<std::size_t>(l) + 1];
      truncated_normal_moments(lo, hi, deg, moments);
      double piece = 0.0, sdp = 1.0;
      for (int l = 0; l <= deg; ++l) {
        piece += taylor[static_cast<std::size_t>(l)] * sdp * moments[static_cast<std::size_t>(l)];
        sdp *= sd;
      }
      total += piece;
    }
    return total;
  }

  double sample(Rng& rng) const {
    double s = 0.0;
    for (int i = 0; i <= degree; ++i) s += (draw_uniform(rng) - 0.5) * scale;
    return s;
  }
};

namespace {

class SmoothedSpline final : public DifferentiableFunction {
 public:
  SmoothedSpline(std::vector<std::shared_ptr<const SplineDensity::Axis>> axes, std::vector<double> sd,
                 double floor_weight, std::shared_ptr<const DifferentiableFunction> floor)
      : axes_(std::move(axes)), sd_(std::move(sd)), weight_(floor_weight), floor_(std::move(floor)) {}

  int dimension() const override { return static_cast<int>(axes_.size()); }
  double evaluate(std::span<const double> x) const override {
    return derivative(MultiIndex::zero(dimension()), x);
  }
  bool supports_derivative(const MultiIndex& k) const override {
    if (k.dimension() != dimension()) return false;
    for (int j = 0; j < dimension(); ++j)
      if (k[j] > axes_[static_cast<std::size_t>(j)]->degree) return false;
    return true;
  }
  double derivative(const MultiIndex& k, std::span<const double> x) const override {
    if (!supports_derivative(k)) throw UnsupportedOrder("smoothed spline: derivative " + k.to_string() + " unavailable");
    double prod = 1.0 - weight_;
    for (int j = 0; j < dimension() && prod != 0.0; ++j)
      prod *= axes_[static_cast<std::size_t>(j)]->smoothed(k[j], x[static_cast<std::size_t>(j)], sd_[static_cast<std::size_t>(j)]);
    if (floor_) prod += weight_ * floor_->derivative(k, x);
    return prod;
  }
  std::vector<double> derivative_on_grid(const MultiIndex& k, const GridSpec& grid) const override {
    if (!supports_derivative(k)) throw UnsupportedOrder("smoothed spline: derivative " + k.to_string() + " unavailable");
    std::vector<double> out = floor_ ? floor_->derivative_on_grid(k, grid) : std::vector<double>(grid.size(), 0.0);
    if (floor_)
      for (double& v : out) v *= weight_;
    std::vector<std::vector<double>> factors(axes_.size());
    for (int j = 0; j < dimension(); ++j) {
      auto& f = factors[static_cast<std::size_t>(j)];
      f = axis_coordinates(grid, j);
      for (double& x : f) x = axes_[static_cast<std::size_t>(j)]->smoothed(k[j], x, sd_[static_cast<std::size_t>(j)]);
    }
    accumulate_separable(grid, 1.0 - weight_, factors, out);
    return out;
  }

 private:
  std::vector<std::shared_ptr<const SplineDensity::Axis>> axes_;
  std::vector<double> sd_;
  double weight_;
  std::shared_ptr<const DifferentiableFunction> floor_;
};

}  // namespace

SplineDensity::SplineDensity(std::vector<int> degrees, SplineOptions options)
    : degrees_(std::move(degrees)), options_(options) {
  if (degrees_.empty()) throw std::invalid_argument("SplineDensity: dimension must be >= 1");
  for (int m : degrees_)
    if (m < 1 || m > 6) throw std::invalid_argument("SplineDensity: order must lie in [1, 6]");
  if (!(options_.scale > 0.0)) throw std::invalid_argument("SplineDensity: scale must be positive");
  if (!(options_.floor_weight >= 0.0 && options_.floor_weight < 1.0))
    throw std::invalid_argument("SplineDensity: floor weight must lie in [0, 1)");
  for (int m : degrees_) axes_.push_back(std::make_shared<Axis>(m, options_.scale));
  if (options_.floor_weight > 0.0) {
    if (!(options_.floor_sd > 0.0)) throw std::invalid_argument("SplineDensity: floor sd must be positive");
    floor_ = std::make_unique<GaussianMixtureDensity>(
        MixingMeasure::dirac(Eigen::VectorXd::Zero(dimension())),
        CovarianceSpec::isotropic(dimension(), options_.floor_sd * options_.floor_sd));
  }
}

SplineDensity::~SplineDensity() = default;

double SplineDensity::support_half_width(int axis) const {
  return 0.5 * (degrees_[static_cast<std::size_t>(axis)] + 1) * options_.scale;
}

double SplineDensity::evaluate(std::span<const double> x) const {
  double prod = 1.0 - options_.floor_weight;
  for (int j = 0; j < dimension() && prod != 0.0; ++j)
    prod *= axes_[static_cast<std::size_t>(j)]->value(0, x[static_cast<std::size_t>(j)]);
  if (floor_) prod += options_.floor_weight * floor_->evaluate(x);
  return prod;
}

bool SplineDensity::supports_derivative(const MultiIndex& k) const {
  if (k.dimension() != dimension()) return false;
  for (int j = 0; j < dimension(); ++j)
    if (k[j] > degrees_[static_cast<std::size_t>(j)] - 1) return false;
  return true;
}

double SplineDensity::derivative(const MultiIndex& k, std::span<const double> x) const {
  if (!supports_derivative(k))
    throw UnsupportedOrder("SplineDensity: derivative " + k.to_string() + " exceeds the piecewise-polynomial oracle");
  double prod = 1.0 - options_.floor_weight;
  for (int j = 0; j < dimension() && prod != 0.0; ++j)
    prod *= axes_[static_cast<std::size_t>(j)]->value(k[j], x[static_cast<std::size_t>(j)]);
  if (floor_) prod += options_.floor_weight * floor_->derivative(k, x);
  return prod;
}

std::vector<double> SplineDensity::derivative_on_grid(const MultiIndex& k, const GridSpec& grid) const {
  if (!supports_derivative(k))
    throw UnsupportedOrder("SplineDensity: derivative " + k.to_string() + " exceeds the piecewise-polynomial oracle");
  std::vector<double> out = floor_ ? floor_->derivative_on_grid(k, grid) : std::vector<double>(grid.size(), 0.0);
  if (floor_)
    for (double& v : out) v *= options_.floor_weight;
  std::vector<std::vector<double>> factors(axes_.size());
  for (int j = 0; j < dimension(); ++j) {
    auto& f = factors[static_cast<std::size_t>(j)];
    f = axis_coordinates(grid, j);
    for (double& x : f) x = axes_[static_cast<std::size_t>(j)]->value(k[j], x);
  }
  accumulate_separable(grid, 1.0 - options_.floor_weight, factors, out);
  return out;
}

std::string SplineDensity::id() const {
  std::ostringstream os;
  os << "spline(m=";
  for (std::size_t j = 0; j < degrees_.size(); ++j) os << (j ? "x" : "") << degrees_[j];
  os << ",d=" << dimension() << ",scale=" << options_.scale << ",floor=" << options_.floor_weight << "/"
     << options_.floor_sd << ")";
  return os.str();
}

Json SplineDensity::describe() const {
  Json doc;
  doc["kind"] = "spline";
  doc["orders"] = degrees_;
  doc["scale"] = options_.scale;
  doc["floor_weight"] = options_.floor_weight;
  doc["floor_sd"] = options_.floor_sd;
  return doc;
}

double SplineDensity::smoothness() const {
  double inv = 0.0;
  for (int m : degrees_) inv += 1.0 / m;
  return dimension() / inv;
}

std::vector<double> SplineDensity::anisotropy() const {
  const double beta = smoothness();
  std::vector<double> alpha;
  for (int m : degrees_) alpha.push_back(beta / m);
  return alpha;
}

double SplineDensity::envelope(std::span<const double> x, double beta) const {
  const int top = strict_floor(beta);
  // Lipschitz constant of D^k of the spline product over all k with k. = top.
  double lip = 0.0;
  for (const auto& k : enumerate_multiindices(dimension(), top)) {
    if (k.order() != top || !supports_derivative(k)) continue;
    double sum = 0.0;
    for (int j = 0; j < dimension(); ++j) {
      double term = axes_[static_cast<std::size_t>(j)]->sup_abs[static_cast<std::size_t>(k[j]) + 1];
      for (int i = 0; i < dimension(); ++i)
        if (i != j) term *= axes_[static_cast<std::size_t>(i)]->sup_abs[static_cast<std::size_t>(k[i])];
      sum += term;
    }
    lip = std::max(lip, sum);
  }
  double env = (1.0 - options_.floor_weight) * lip;
  if (floor_) env += options_.floor_weight * floor_->envelope(x, beta);
  return env;
}

double SplineDensity::tau0() const { return floor_ ? floor_->tau0() : 0.0; }

TailParameters SplineDensity::tail() const {
  double corner = 0.0;
  for (int j = 0; j < dimension(); ++j) corner += support_half_width(j) * support_half_width(j);
  corner = std::sqrt(corner);
  if (!floor_) return {corner, 1.0, 0.0, 2.0};
  const double s2 = options_.floor_sd * options_.floor_sd;
  const double c = options_.floor_weight * std::exp(-0.5 * dimension() * (kLog2Pi + std::log(s2)));
  return {corner, 1.0 / (2.0 * s2), c, 2.0};
}

Eigen::VectorXd SplineDensity::sample(Rng& rng) const {
  if (floor_ && draw_uniform(rng) < options_.floor_weight) return floor_->sample(rng);
  Eigen::VectorXd x(dimension());
  for (int j = 0; j < dimension(); ++j) x[j] = axes_[static_cast<std::size_t>(j)]->sample(rng);
  return x;
}

double SplineDensity::marginal_cdf(int axis, double t) const {
  double v = (1.0 - options_.floor_weight) * axes_[static_cast<std::size_t>(axis)]->cdf(t);
  if (floor_) v += options_.floor_weight * floor_->marginal_cdf(axis, t);
  return v;
}

double SplineDensity::tail_radius(double level) const {
  double r = 0.0;
  for (int j = 0; j < dimension(); ++j) r = std::max(r, support_half_width(j));
  if (floor_) r = std::max(r, floor_->tail_radius(level / options_.floor_weight));
  return r;
}

std::shared_ptr<const DifferentiableFunction> SplineDensity::smoothed(std::span<const double> kernel_sd) const {
  std::vector<double> sd(kernel_sd.begin(), kernel_sd.end());
  return std::make_shared<SmoothedSpline>(axes_, sd, options_.floor_weight,
                                          floor_ ? floor_->smoothed(kernel_sd) : nullptr);
}

// ---------------------------------------------------------------------------

std::shared_ptr<GaussianMixtureDensity> make_gaussian_mixture(const MixingMeasure& mixing,
                                                              const CovarianceSpec& covariance) {
  return std::make_shared<GaussianMixtureDensity>(mixing, covariance);
}

std::shared_ptr<GaussianMixtureDensity> make_standard_normal(int dimension) {
  return make_gaussian_mixture(MixingMeasure::dirac(Eigen::VectorXd::Zero(dimension)),
                               CovarianceSpec::isotropic(dimension, 1.0));
}

std::shared_ptr<SplineDensity> make_spline_density(int order, int dimension, SplineOptions options) {
  if (dimension < 1) throw std::invalid_argument("make_spline_density: dimension must be >= 1");
  return std::make_shared<SplineDensity>(std::vector<int>(static_cast<std::size_t>(dimension), order), options);
}

std::shared_ptr<SplineDensity> make_anisotropic_spline_density(std::vector<int> orders, SplineOptions options) {
  return std::make_shared<SplineDensity>(std::move(orders), options);
}

std::shared_ptr<TestDensity> density_from_json(const Json& spec) {
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "standard_normal") return make_standard_normal(spec.value("dimension", 1));
  if (kind == "gaussian_mixture") {
    MixingMeasure f;
    for (const auto& row : spec.at("atoms")) {
      const auto v = row.get<std::vector<double>>();
      f.atoms.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    f.weights = spec.at("weights").get<std::vector<double>>();
    const auto rows = spec.at("covariance").get<std::vector<std::vector<double>>>();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows.size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].at(j);
    return make_gaussian_mixture(f, CovarianceSpec::from_matrix(m));
  }
  if (kind == "spline") {
    SplineOptions o;
    o.scale = spec.value("scale", o.scale);
    o.floor_weight = spec.value("floor_weight", o.floor_weight);
    o.floor_sd = spec.value("floor_sd", o.floor_sd);
    if (spec.contains("orders")) return make_anisotropic_spline_density(spec["orders"].get<std::vector<int>>(), o);
    return make_spline_density(spec.at("order").get<int>(), spec.value("dimension", 1), o);
  }
  throw std::invalid_argument("density_from_json: unknown kind '" + kind + "'");
}

std::vector<MultiIndex> transform_indices(int dimension, double beta, const std::vector<double>& alpha) {
  if (!std::isfinite(beta)) throw std::invalid_argument("transform_indices: beta must be finite");
  if (alpha.size() != static_cast<std::size_t>(dimension))
    throw std::invalid_argument("transform_indices: anisotropy length differs from dimension");
  int max_order = 0;
  for (double a : alpha) max_order += static_cast<int>(std::ceil(beta / a));
  max_order = std::min(max_order, CoefficientTable::kMaxOrder);
  std::vector<MultiIndex> out;
  for (const auto& k : enumerate_multiindices(dimension, max_order)) {
    const double w = k.weighted_order(alpha);
    if (k.order() >= 1 && w >= 1.0 - 1e-12 && w < beta - 1e-12) out.push_back(k);
  }
  return out;
}

Json IntegrabilityReport::to_json() const {
  Json doc;
  doc["beta"] = beta;
  doc["epsilon"] = epsilon;
  doc["anisotropic"] = anisotropic;
  Json rows = Json::array();
  for (const auto& t : terms) {
    Json r;
    r["index"] = t.index.entries();
    r["exponent"] = t.exponent;
    r["value"] = t.value;
    r["finite"] = t.finite;
    rows.push_back(std::move(r));
  }
  doc["terms"] = std::move(rows);
  return doc;
}

IntegrabilityReport verify_integrability_conditions(const TestDensity& f0, double epsilon, const GridSpec& grid) {
  grid.validate();
  if (grid.dimension() != f0.dimension()) throw std::invalid_argument("verify_integrability_conditions: dimension mismatch");
  IntegrabilityReport report;
  report.beta = f0.smoothness();
  report.epsilon = epsilon;
  const auto alpha = f0.anisotropy();
  report.anisotropic = std::any_of(alpha.begin(), alpha.end(), [](double a) { return std::abs(a - 1.0) > 1e-12; });
  const auto indices = transform_indices(f0.dimension(), report.beta, alpha);
  for (const auto& k : indices)
    if (!f0.supports_derivative(k)) throw UnsupportedOrder("verify_integrability_conditions: derivative " + k.to_string() + " unavailable");

  const std::size_t count = grid.size();
  std::vector<double> point(static_cast<std::size_t>(grid.dimension()));
  std::vector<double> centre(static_cast<std::size_t>(grid.dimension())), half(centre.size());
  for (int j = 0; j < grid.dimension(); ++j) {
    centre[static_cast<std::size_t>(j)] = 0.5 * (grid.lower[static_cast<std::size_t>(j)] + grid.upper[static_cast<std::size_t>(j)]);
    half[static_cast<std::size_t>(j)] = 0.5 * (grid.upper[static_cast<std::size_t>(j)] - grid.lower[static_cast<std::size_t>(j)]);
  }
  constexpr double kWindows[3] = {0.5, 0.75, 1.0};
  for (const auto& k : indices) {
    IntegrabilityTerm term;
    term.index = k;
    term.exponent = (2.0 * report.beta + epsilon) / k.weighted_order(alpha);
    double sums[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < count; ++i) {
      grid.point(i, point);
      const double f = f0.evaluate(point);
      if (!(f > 1e-300)) continue;
      const double ratio = std::abs(f0.derivative(k, point)) / f;
      const double contrib = grid.weight(i) * f * std::pow(ratio, term.exponent);
      double reach = 0.0;
      for (int j = 0; j < grid.dimension(); ++j)
        reach = std::max(reach, std::abs(point[static_cast<std::size_t>(j)] - centre[static_cast<std::size_t>(j)]) / half[static_cast<std::size_t>(j)]);
      for (int w = 0; w < 3; ++w)
        if (reach <= kWindows[w]) sums[w] += contrib;
    }
    term.value = sums[2];
    term.finite = std::isfinite(sums[2]) && (sums[2] - sums[1]) <= 1e-6 * std::max(sums[2], 1e-300) + 1e-300;
    report.terms.push_back(std::move(term));
  }
  return report;
}

}  // namespace dpmlab
