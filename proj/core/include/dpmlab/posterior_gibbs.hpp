#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpmlab/covariance.hpp"
#include "dpmlab/grid.hpp"
#include "dpmlab/mixing_measure.hpp"
#include "dpmlab/prior_model.hpp"
#include "dpmlab/report_io.hpp"
#include "dpmlab/rng.hpp"
#include "dpmlab/test_densities.hpp"

namespace dpmlab {

// Retained draws drop components lighter than this.
inline constexpr double kPruneWeight = 1e-14;
inline constexpr std::size_t kMinRetainedDraws = 100;

struct GibbsState {
  int truncation = 0;
  std::vector<double> sticks;          // V_h, with V_H = 1
  std::vector<Eigen::VectorXd> atoms;  // Z_h
  Eigen::MatrixXd covariance;
  std::vector<int> allocations;        // 0-based component per data point
  long iteration = 0;

  std::vector<double> weights() const;
  Json to_json() const;
};

// Non-finite likelihood; what() names the iteration and state() holds the dump.
class GibbsDivergence : public std::runtime_error {
 public:
  GibbsDivergence(const std::string& what, Json state) : std::runtime_error(what), state_(std::move(state)) {}
  const Json& state() const { return state_; }

 private:
  Json state_;
};

struct GibbsOptions {
  int truncation = 20;  // H
  int iterations = 1500;
  int burn_in = 500;
  int thin = 5;
  std::optional<GridSpec> grid;                 // defaults to a box around data and base measure
  std::shared_ptr<const TestDensity> truth;     // per-draw losses when set
  std::optional<Eigen::MatrixXd> holdout;       // held-out log-likelihood trace when set
};

struct PosteriorDraw {
  MixingMeasure mixing;
  CovarianceSpec covariance;
};

struct PosteriorSummary {
  std::vector<PosteriorDraw> draws;
  GridSpec grid;
  std::vector<double> mean_density;     // posterior mean density on `grid`
  std::vector<double> l1_loss;          // per draw, against options.truth
  std::vector<double> hellinger_loss;
  std::vector<double> first_stick;      // V_1 per retained draw
  std::vector<double> precision_trace;  // tr(Psi Sigma^{-1}); tr(Sigma^{-1}) for diagonal priors
  std::vector<double> largest_weight;   // heaviest component per retained draw
  std::vector<double> holdout_loglik;   // per iteration, mean over holdout points
  std::size_t covariance_retries = 0;   // jittered SPD retries
  GibbsState final_state;

  double mean_density_mass() const;
  Json to_json() const;
};

// Blocked Gibbs sampler for the truncated stick-breaking mixture: allocations,
// sticks, atoms and covariance are updated in that order each sweep. An empty
// data matrix (n = 0) samples the prior; otherwise n >= 10 is required.
PosteriorSummary run_gibbs(const Eigen::MatrixXd& data, const PriorSpec& prior, const GibbsOptions& options, Rng& rng);

enum class LossMetric { L1, Hellinger };
LossMetric loss_metric_from_string(const std::string& s);
std::string to_string(LossMetric metric);

// Empirical q-quantile of rho(f0, p) over the retained draws.
double posterior_loss_quantile(const PosteriorSummary& summary, const TestDensity& f0, LossMetric metric, double q);

// n x d matrix from CSV text; a non-numeric first row is taken as a header.
Eigen::MatrixXd read_data_csv(std::istream& in);
Eigen::MatrixXd read_data_csv(const std::filesystem::path& path);

// One JSON object per retained draw.
void write_draws_jsonl(const PosteriorSummary& summary, std::ostream& out);

}  // namespace dpmlab
