#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dpmlab/posterior_gibbs.hpp"
#include "dpmlab/prior_model.hpp"
#include "dpmlab/report_io.hpp"
#include "dpmlab/test_densities.hpp"

namespace dpmlab {

enum class RatePriorKind { DirichletProcess, FiniteMixture };

struct RateInputs {
  double beta = 2.0;
  int dimension = 1;
  int kappa = 2;
  double tau = 2.0;
  std::optional<std::vector<double>> anisotropy;  // sums to d
  RatePriorKind prior = RatePriorKind::DirichletProcess;
  double tau1 = 1.0;  // finite-mixture prior only
};

struct RateFormula {
  RateInputs inputs;
  double alpha_max = 1.0;
  double effective_dimension = 0.0;  // d*
  double exponent = 0.0;             // beta / (2 beta + d*)
  double log_power = 0.0;            // t0, plus the finite-mixture offset when applicable
  double finite_mixture_offset = 0.0;
  std::vector<double> axial_smoothness;  // beta_j = beta / alpha_j

  // n^{-exponent} (log n)^{log_power}
  double epsilon_n(double n) const;
  Json to_json() const;
};

RateFormula theoretical_rate(const RateInputs& inputs);

// d / sum_j (1 / beta_j)
double harmonic_mean_smoothness(const std::vector<double>& axial);

struct ChainSettings {
  int iterations = 1500;
  int burn_in = 500;
  int thin = 5;
  std::optional<int> truncation;  // fixed H; otherwise the sieve sizing below
  int truncation_floor = 20;
  int truncation_cap = 60;
};

// max(floor(n eps_n^2 / log n), floor), clipped to the cap.
int sieve_truncation(const RateFormula& formula, double n, const ChainSettings& chain);

struct RateExperimentConfig {
  Json density;  // density_from_json form
  PriorSpec prior;
  std::vector<int> ladder;
  int replications = 3;
  ChainSettings chain;
  LossMetric loss = LossMetric::L1;
  std::uint64_t seed = 1;
  RateInputs rate;  // beta and tau used for eps_n and the reference slope
  int bootstrap_resamples = 1000;

  void validate() const;
  // Normalized form; the fingerprint is taken over this.
  Json to_json() const;
  static RateExperimentConfig from_json(const Json& j);
};

struct ExperimentCell {
  int n = 0;
  int replication = 0;
  int truncation = 0;
  bool ok = false;
  std::string error;
  double median_loss = 0.0;
  double mean_density_loss = 0.0;
  std::size_t covariance_retries = 0;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  std::size_t points = 0;
};

struct RateExperimentResult {
  Json config;
  std::string fingerprint;
  RateFormula formula;
  std::vector<ExperimentCell> cells;  // ladder-major, replication-minor
  SlopeFit fit;
  double reference_slope = 0.0;       // -beta / (2 beta + d*)
  std::size_t failed_cells = 0;
  Json to_json() const;
  std::string to_csv() const;
};

// Cells run on `workers` threads; each cell draws its data and chain from
// streams derived from (seed, cell index), so results do not depend on scheduling.
RateExperimentResult run_rate_experiment(const RateExperimentConfig& config, int workers = 1);

// Slope of log median loss on log n with a percentile bootstrap CI that
// resamples replications independently within each ladder level.
SlopeFit fit_rate_slope(const std::vector<ExperimentCell>& cells, int resamples, std::uint64_t seed);

enum class ReportFormat { Json, Csv };
ReportFormat report_format_from_string(const std::string& s);
std::string render_report(const RateExperimentResult& result, ReportFormat format);
void emit_report(const RateExperimentResult& result, ReportFormat format, const std::filesystem::path& path);

struct SuiteResult {
  std::string name;
  bool pass = false;
  Json details;
};

std::vector<std::string> verify_suite_names();
// Named property suites: kernel_order, hellinger_order, sieve, priors, discretize, divergences.
SuiteResult run_verify_suite(const std::string& name, std::uint64_t seed, int workers = 1);

}  // namespace dpmlab
