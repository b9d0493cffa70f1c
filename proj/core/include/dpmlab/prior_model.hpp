#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpmlab/covariance.hpp"
#include "dpmlab/grid.hpp"
#include "dpmlab/mixing_measure.hpp"
#include "dpmlab/report_io.hpp"
#include "dpmlab/rng.hpp"
#include "dpmlab/test_densities.hpp"

namespace dpmlab {

enum class CovariancePriorKind {
  InverseWishart,              // Sigma ~ IW(nu, Psi): Sigma^{-1} ~ Wishart(nu, Psi^{-1})
  InverseGammaDiagonal,        // sigma_j^2 ~ IG(shape, rate)
  SquaredInverseGammaDiagonal  // sigma_j ~ IG(shape, rate)
};

std::string to_string(CovariancePriorKind kind);

// Dirichlet process with Gaussian base measure N(base_mean, base_covariance)
// and total mass |alpha|, combined with a covariance prior.
struct PriorSpec {
  Eigen::VectorXd base_mean;
  Eigen::MatrixXd base_covariance;
  double total_mass = 1.0;
  CovariancePriorKind kind = CovariancePriorKind::InverseWishart;
  double dof = 3.0;            // nu
  Eigen::MatrixXd scale;       // Psi
  double shape = 2.0;          // diagonal kinds
  double rate = 1.0;

  static PriorSpec inverse_wishart(int dimension, double dof, const Eigen::MatrixXd& scale, double base_sd = 2.0,
                                   double total_mass = 1.0);
  static PriorSpec diagonal(int dimension, CovariancePriorKind kind, double shape, double rate, double base_sd = 2.0,
                            double total_mass = 1.0);

  int dimension() const { return static_cast<int>(base_mean.size()); }
  // 2 for inverse-Wishart and inverse-gamma diagonals, 1 for the squared inverse-gamma.
  int kappa() const { return kind == CovariancePriorKind::SquaredInverseGammaDiagonal ? 1 : 2; }
  void validate() const;
  Json to_json() const;
  static PriorSpec from_json(const Json& j);
};

// Precision-matrix draw Sigma^{-1}; the Bartlett construction for Wishart.
Eigen::MatrixXd draw_precision(const PriorSpec& spec, Rng& rng);

struct CovarianceDraw {
  CovarianceSpec covariance;
  int retries = 0;  // SPD failures resampled
};
CovarianceDraw draw_covariance(const PriorSpec& spec, Rng& rng);

Eigen::VectorXd draw_base_atom(const PriorSpec& spec, Rng& rng);

struct StickBreakingDraw {
  int truncation = 0;
  std::vector<double> sticks;   // V_h
  std::vector<double> weights;  // pi_h = V_h prod_{j<h}(1 - V_j)
  double remainder = 0.0;       // prod_{h<=H}(1 - V_h)
  std::vector<Eigen::VectorXd> atoms;
  // Weights with the remainder folded into the last atom.
  MixingMeasure measure() const;
};

StickBreakingDraw draw_sticks(int truncation, double total_mass, Rng& rng);

struct PriorDraw {
  StickBreakingDraw sticks;
  CovarianceSpec covariance;
  std::shared_ptr<GaussianMixtureDensity> density;
  int covariance_retries = 0;
};

PriorDraw sample_prior_density(const PriorSpec& spec, int truncation, Rng& rng);

struct StickTailProbability {
  double exact = 0.0;           // P(sum_{h>H} pi_h > eps) = P(Gamma(H, |alpha|) < log(1/eps))
  double stirling_bound = 0.0;  // (e |alpha| log(1/eps) / H)^H
  bool bound_applies = false;   // H >= e |alpha| log(1/eps)
};

StickTailProbability stick_tail_probability(int truncation, double total_mass, double epsilon);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t draws = 0;
};

MonteCarloEstimate stick_tail_monte_carlo(int truncation, double total_mass, double epsilon, std::size_t draws,
                                          std::uint64_t seed);

// Profile fit of log m(s) = c0 + c1 log s - C s^e over the exponent e, weighting
// each point by its binomial precision. The interval is the likelihood-ratio 95% set.
struct ExponentFit {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t points = 0;
  bool degenerate = false;  // fewer than four usable ladder points
};

ExponentFit fit_tail_exponent(const std::vector<double>& s, const std::vector<double>& mass, std::size_t samples);

struct TailLadder {
  std::string condition;
  std::vector<double> x;
  std::vector<double> estimate;
  std::vector<double> standard_error;
  ExponentFit fit;
  double expected = 0.0;
  std::string to_csv() const;
  Json summary() const;
};

struct PriorTailReport {
  Json prior;
  std::size_t samples = 0;
  TailLadder base_tail;          // 1 - alpha_bar([-x, x]^d), exponent a1
  TailLadder largest_precision;  // G{eig_d(Sigma^{-1}) >= x}, exponent a2
  TailLadder smallest_precision; // G{eig_1(Sigma^{-1}) < x}, power a3
  TailLadder band_mass;          // G{s < eig_j(Sigma^{-1}) < s(1 + t)}, kappa = 2 e
  Json to_json() const;
};

PriorTailReport verify_prior_tails(const PriorSpec& spec, std::size_t samples, std::uint64_t seed,
                                   double band_width = 0.5, int workers = 1);

struct WishartFactsReport {
  double dof = 0.0;
  int dimension = 0;
  std::size_t samples = 0;
  double trace_mean = 0.0;
  double trace_mean_stderr = 0.0;
  double trace_expected = 0.0;       // nu d
  double ks_statistic = 0.0;
  double ks_p_value = 0.0;
  bool ks_pass = false;              // p >= 0.001
  ExponentFit small_eigen_power;     // slope of log P{eig_1 < x} against log x
  double small_eigen_expected = 0.0; // (nu + 1 - d) / 2
  double small_eigen_stated = 0.0;   // (nu + 3 - d) / 2
  std::optional<double> inverse_gamma_ks_p;  // d = 1 only
  Json to_json() const;
};

// Uses tr(Psi Sigma^{-1}) ~ chi^2_{nu d}, which reduces general Psi to the identity case.
WishartFactsReport check_wishart_facts(double dof, const Eigen::MatrixXd& scale, std::size_t samples, std::uint64_t seed);

struct KlBallOptions {
  std::optional<double> beta;  // defaults to f0.smoothness()
  std::optional<double> tau;   // defaults to f0.tail().tau
  int workers = 1;
};

struct KlBallMass {
  std::size_t draws = 0;
  std::size_t hits = 0;
  std::size_t support_failures = 0;
  double estimate = 0.0;
  double standard_error = 0.0;
  std::optional<double> upper_bound;  // 95% bound when there are no hits
  double radius = 0.0;                // A eps~^2
  double log_mass = 0.0;
  double predicted_shape = 0.0;       // eps~^{-d*/beta} (log 1/eps~)^{s d* + 1}
  Json to_json() const;
};

KlBallMass estimate_kl_ball_mass(const PriorSpec& spec, const TestDensity& f0, double epsilon, double a,
                                 std::size_t draws, int truncation, const GridSpec& grid, std::uint64_t seed,
                                 const KlBallOptions& options = {});

}  // namespace dpmlab
