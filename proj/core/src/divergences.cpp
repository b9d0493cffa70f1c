#include "dpmlab/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dpmlab {

namespace {

std::string describe_point(std::span<const double> x) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

std::vector<double> sample_checked(const GridSpec& grid, const PointFunction& f, const char* name) {
  std::vector<double> out(grid.size());
  std::vector<double> x(static_cast<std::size_t>(grid.dimension()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    grid.point(i, x);
    out[i] = f(x);
    if (!std::isfinite(out[i]))
      throw NonFiniteDensity(std::string(name) + " is not finite at " + describe_point(x), x);
  }
  return out;
}

double hellinger_squared_on_grid(const GridSpec& grid, std::span<const double> p, std::span<const double> q) {
  std::vector<double> terms(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = std::sqrt(std::max(p[i], 0.0)) - std::sqrt(std::max(q[i], 0.0));
    terms[i] = diff * diff;
  }
  return integrate(grid, terms);
}

}  // namespace

PointFunction as_point_function(const DifferentiableFunction& f) {
  return [&f](std::span<const double> x) { return f.evaluate(x); };
}

double l1_on_grid(const GridSpec& grid, std::span<const double> p, std::span<const double> q) {
  if (p.size() != grid.size() || q.size() != grid.size()) throw std::invalid_argument("l1_on_grid: size mismatch");
  std::vector<double> terms(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) terms[i] = std::abs(p[i] - q[i]);
  return integrate(grid, terms);
}

double hellinger_on_grid(const GridSpec& grid, std::span<const double> p, std::span<const double> q) {
  if (p.size() != grid.size() || q.size() != grid.size()) throw std::invalid_argument("hellinger_on_grid: size mismatch");
  return std::sqrt(hellinger_squared_on_grid(grid, p, q));
}

double l1_distance(const PointFunction& p, const PointFunction& q, const GridSpec& grid) {
  grid.validate();
  return l1_on_grid(grid, sample_checked(grid, p, "p"), sample_checked(grid, q, "q"));
}

double hellinger(const PointFunction& p, const PointFunction& q, const GridSpec& grid) {
  grid.validate();
  return hellinger_on_grid(grid, sample_checked(grid, p, "p"), sample_checked(grid, q, "q"));
}

double gaussian_hellinger_oracle(const CovarianceSpec& cov1, const CovarianceSpec& cov2, const Eigen::VectorXd& mean1,
                                 const Eigen::VectorXd& mean2) {
  if (cov1.dimension() != cov2.dimension() || mean1.size() != cov1.dimension() || mean2.size() != cov1.dimension())
    throw std::invalid_argument("gaussian_hellinger_oracle: dimension mismatch");
  const CovarianceSpec avg = CovarianceSpec::from_matrix(0.5 * (cov1.matrix() + cov2.matrix()));
  const double log_bc = 0.25 * (cov1.log_det() + cov2.log_det()) - 0.5 * avg.log_det() -
                        0.125 * avg.mahalanobis_squared(mean1 - mean2);
  const double h2 = 2.0 - 2.0 * std::exp(log_bc);
  return std::sqrt(std::max(h2, 0.0));
}

KlMoments kl_moments_on_grid(const GridSpec& grid, std::span<const double> f0, std::span<const double> p,
                             double support_tolerance) {
  if (f0.size() != grid.size() || p.size() != grid.size()) throw std::invalid_argument("kl_moments: size mismatch");
  KlMoments m;
  std::vector<double> first(f0.size(), 0.0), second(f0.size(), 0.0);
  std::vector<double> x(static_cast<std::size_t>(grid.dimension()));
  for (std::size_t i = 0; i < f0.size(); ++i) {
    if (f0[i] <= 0.0) continue;
    if (p[i] <= 0.0 && f0[i] > support_tolerance) {
      grid.point(i, x);
      throw SupportMismatch("kl_moments: p vanishes where f0 = " + std::to_string(f0[i]) + " at " + describe_point(x), x);
    }
    double a = f0[i], b = p[i];
    if (a < kLogFloor) {
      a = kLogFloor;
      ++m.floored;
    }
    if (b < kLogFloor) {
      b = kLogFloor;
      ++m.floored;
    }
    const double l = std::log(a) - std::log(b);
    first[i] = f0[i] * l;
    second[i] = f0[i] * l * l;
  }
  m.first = integrate(grid, first);
  m.second = integrate(grid, second);
  return m;
}

KlMoments kl_moments(const PointFunction& f0, const PointFunction& p, const GridSpec& grid, double support_tolerance) {
  grid.validate();
  return kl_moments_on_grid(grid, sample_checked(grid, f0, "f0"), sample_checked(grid, p, "p"), support_tolerance);
}

Json InequalityCheck::to_json() const {
  Json doc;
  doc["lhs"] = lhs;
  doc["rhs"] = rhs;
  doc["slack"] = slack;
  doc["tolerance"] = tolerance;
  doc["verdict"] = holds ? "pass" : "fail";
  return doc;
}

InequalityCheck make_check(double lhs, double rhs, double tolerance) {
  InequalityCheck c;
  c.lhs = lhs;
  c.rhs = rhs;
  c.slack = rhs - lhs;
  c.tolerance = tolerance;
  c.holds = lhs <= rhs + tolerance;
  return c;
}

double log_remainder(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("log_remainder: x must be positive");
  const double u = std::sqrt(x) - 1.0;
  if (std::abs(u) < 1e-4) return 1.0 - 2.0 * u / 3.0 + u * u / 2.0;  // series about x = 1
  return (2.0 * u - std::log(x)) / (u * u);
}

double kl_hellinger_lambda_limit() {
  static const double limit = [] {
    auto gap = [](double x) { return 2.0 * std::log(1.0 / x) - log_remainder(x); };
    double lo = 1e-6, hi = 1.0 - 1e-9;  // gap(lo) > 0 > gap(hi)
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (gap(mid) > 0.0 ? lo : hi) = mid;
    }
    return lo;
  }();
  return limit;
}

Json KlByHellingerReport::to_json() const {
  Json doc;
  doc["lambda"] = lambda;
  doc["hellinger_squared"] = hellinger_squared;
  doc["first"] = first.to_json();
  doc["second"] = second.to_json();
  doc["floored"] = floored;
  return doc;
}

KlByHellingerReport check_kl_by_hell(const PointFunction& p, const PointFunction& q, double lambda,
                                     const GridSpec& grid, double tolerance) {
  if (!(lambda > 0.0 && lambda < kl_hellinger_lambda_limit()))
    throw std::invalid_argument("check_kl_by_hell: lambda must lie in (0, lambda0)");
  grid.validate();
  const auto pv = sample_checked(grid, p, "p");
  const auto qv = sample_checked(grid, q, "q");
  KlByHellingerReport r;
  r.lambda = lambda;
  r.hellinger_squared = hellinger_squared_on_grid(grid, pv, qv);
  const KlMoments kl = kl_moments_on_grid(grid, pv, qv);
  r.floored = kl.floored;
  std::vector<double> tail1(pv.size(), 0.0), tail2(pv.size(), 0.0);
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (pv[i] <= 0.0) continue;
    const double a = std::max(pv[i], kLogFloor), b = std::max(qv[i], kLogFloor);
    if (b / a <= lambda) {
      const double l = std::log(a) - std::log(b);
      tail1[i] = pv[i] * l;
      tail2[i] = pv[i] * l * l;
    }
  }
  const double t1 = integrate(grid, tail1), t2 = integrate(grid, tail2);
  const double ll = std::log(1.0 / lambda);
  r.first = make_check(kl.first, r.hellinger_squared * (1.0 + 2.0 * ll) + 2.0 * t1, tolerance);
  r.second = make_check(kl.second, r.hellinger_squared * (12.0 + 2.0 * ll * ll) + 8.0 * t2, tolerance);
  return r;
}

Json HellingerMixingReport::to_json() const {
  Json doc;
  doc["mixing"] = mixing.to_json();
  doc["convolution"] = convolution.to_json();
  return doc;
}

HellingerMixingReport check_hellinger_mixing(const std::vector<std::pair<PointFunction, PointFunction>>& pairs,
                                             const std::vector<double>& weights, const GridSpec& grid,
                                             std::span<const double> kernel_sd, double tolerance) {
  if (pairs.empty() || pairs.size() != weights.size())
    throw std::invalid_argument("check_hellinger_mixing: need one weight per pair");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("check_hellinger_mixing: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("check_hellinger_mixing: weights must sum to one");
  grid.validate();

  std::vector<double> mix_p(grid.size(), 0.0), mix_q(grid.size(), 0.0);
  double mixed_rhs = 0.0;
  HellingerMixingReport report;
  report.convolution = make_check(0.0, 0.0, tolerance);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto pv = sample_checked(grid, pairs[i].first, "p");
    const auto qv = sample_checked(grid, pairs[i].second, "q");
    mixed_rhs += weights[i] * hellinger_squared_on_grid(grid, pv, qv);
    for (std::size_t j = 0; j < pv.size(); ++j) {
      mix_p[j] += weights[i] * pv[j];
      mix_q[j] += weights[i] * qv[j];
    }
    if (!kernel_sd.empty()) {
      const auto sp = gaussian_smooth(grid, pv, kernel_sd);
      const auto sq = gaussian_smooth(grid, qv, kernel_sd);
      const auto check = make_check(hellinger_on_grid(grid, sp, sq), hellinger_on_grid(grid, pv, qv), tolerance);
      if (check.lhs - check.rhs > worst) {
        worst = check.lhs - check.rhs;
        report.convolution = check;
      }
    }
  }
  report.mixing = make_check(hellinger_squared_on_grid(grid, mix_p, mix_q), mixed_rhs, tolerance);
  return report;
}

}  // namespace dpmlab
