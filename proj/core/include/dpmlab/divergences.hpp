#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpmlab/covariance.hpp"
#include "dpmlab/grid.hpp"
#include "dpmlab/report_io.hpp"
#include "dpmlab/test_densities.hpp"

namespace dpmlab {

class SupportMismatch : public std::runtime_error {
 public:
  SupportMismatch(const std::string& what, std::vector<double> point)
      : std::runtime_error(what), point_(std::move(point)) {}
  const std::vector<double>& point() const { return point_; }

 private:
  std::vector<double> point_;
};

class NonFiniteDensity : public std::runtime_error {
 public:
  NonFiniteDensity(const std::string& what, std::vector<double> point)
      : std::runtime_error(what), point_(std::move(point)) {}
  const std::vector<double>& point() const { return point_; }

 private:
  std::vector<double> point_;
};

// Densities are floored here before taking logarithms.
inline constexpr double kLogFloor = 1e-300;

PointFunction as_point_function(const DifferentiableFunction& f);

// Grid-sample forms. Negative samples are treated as zero inside square roots.
double l1_on_grid(const GridSpec& grid, std::span<const double> p, std::span<const double> q);
double hellinger_on_grid(const GridSpec& grid, std::span<const double> p, std::span<const double> q);

// Throw NonFiniteDensity naming the first offending grid point.
double l1_distance(const PointFunction& p, const PointFunction& q, const GridSpec& grid);
double hellinger(const PointFunction& p, const PointFunction& q, const GridSpec& grid);

// Closed form through the Bhattacharyya coefficient; d_H^2 = 2 - 2 BC.
double gaussian_hellinger_oracle(const CovarianceSpec& cov1, const CovarianceSpec& cov2, const Eigen::VectorXd& mean1,
                                 const Eigen::VectorXd& mean2);

struct KlMoments {
  double first = 0.0;   // P0 log(f0/p)
  double second = 0.0;  // P0 log^2(f0/p)
  std::size_t floored = 0;
};

// Throws SupportMismatch where p vanishes while f0 exceeds `support_tolerance`.
KlMoments kl_moments(const PointFunction& f0, const PointFunction& p, const GridSpec& grid,
                     double support_tolerance = 1e-12);
KlMoments kl_moments_on_grid(const GridSpec& grid, std::span<const double> f0, std::span<const double> p,
                             double support_tolerance = 1e-12);

struct InequalityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  double tolerance = 0.0;
  bool holds = true;
  Json to_json() const;
};

InequalityCheck make_check(double lhs, double rhs, double tolerance);

// The function r with log x = 2(sqrt x - 1) - r(x)(sqrt x - 1)^2.
double log_remainder(double x);

// Largest x with r(t) <= 2 log(1/t) on (0, x), found once by bisection.
double kl_hellinger_lambda_limit();

struct KlByHellingerReport {
  double lambda = 0.0;
  double hellinger_squared = 0.0;
  InequalityCheck first;   // P log(p/q)
  InequalityCheck second;  // P log^2(p/q)
  std::size_t floored = 0;
  Json to_json() const;
};

// Both Hellinger-to-KL inequalities by quadrature. Requires 0 < lambda < kl_hellinger_lambda_limit().
KlByHellingerReport check_kl_by_hell(const PointFunction& p, const PointFunction& q, double lambda,
                                     const GridSpec& grid, double tolerance = 1e-9);

struct HellingerMixingReport {
  InequalityCheck mixing;       // d_H^2 of mixtures vs mixture of d_H^2
  InequalityCheck convolution;  // d_H(phi*p, phi*q) vs d_H(p, q), worst pair
  Json to_json() const;
};

// `kernel_sd` (per axis) selects the smoothing kernel for the convolution check;
// an empty span skips it.
HellingerMixingReport check_hellinger_mixing(const std::vector<std::pair<PointFunction, PointFunction>>& pairs,
                                             const std::vector<double>& weights, const GridSpec& grid,
                                             std::span<const double> kernel_sd, double tolerance = 1e-9);

}  // namespace dpmlab
