#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpmlab/grid.hpp"
#include "dpmlab/index_calculus.hpp"
#include "dpmlab/report_io.hpp"
#include "dpmlab/test_densities.hpp"

namespace dpmlab {

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateTruncation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TransformTerm {
  MultiIndex index;
  double weight = 0.0;  // d_k * sigma^{<k, alpha>}
};

// f0 - sum_k d_k sigma^{<k,alpha>} D^k f0 over 1 <= <k,alpha> < beta. May be negative.
class TransformedFunction {
 public:
  TransformedFunction(std::shared_ptr<const TestDensity> f0, double beta, double sigma,
                      std::optional<std::vector<double>> alpha = std::nullopt);

  const TestDensity& base() const { return *f0_; }
  std::shared_ptr<const TestDensity> base_ptr() const { return f0_; }
  double beta() const { return beta_; }
  double sigma() const { return sigma_; }
  bool anisotropic() const { return anisotropic_; }
  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<TransformTerm>& terms() const { return terms_; }
  bool is_identity() const { return terms_.empty(); }

  // Per-axis kernel sd sigma^{alpha_j}.
  std::vector<double> kernel_sd() const;

  double evaluate(std::span<const double> x) const;
  bool has_closed_form_smoothing() const { return smoothed_base_ != nullptr; }
  // K_sigma (T f0)(x); throws std::logic_error without a closed form.
  double smoothed(std::span<const double> x) const;

  std::vector<double> values_on_grid(const GridSpec& grid) const;
  // Closed form when available, FFT otherwise.
  std::vector<double> smoothed_on_grid(const GridSpec& grid) const;

 private:
  std::shared_ptr<const TestDensity> f0_;
  double beta_;
  double sigma_;
  bool anisotropic_;
  std::vector<double> alpha_;
  std::vector<TransformTerm> terms_;
  std::shared_ptr<const DifferentiableFunction> smoothed_base_;
};

TransformedFunction apply_transform(std::shared_ptr<const TestDensity> f0, double beta, double sigma,
                                    std::optional<std::vector<double>> alpha = std::nullopt);

// Closed-form K_sigma f (per-axis sd sigma^{alpha_j}); nullptr when f has none.
std::shared_ptr<const DifferentiableFunction> convolve(const TestDensity& f, double sigma,
                                                       std::optional<std::vector<double>> alpha = std::nullopt);
// FFT route for arbitrary grid samples. Throws ResolutionError on coarse grids.
std::vector<double> convolve_on_grid(const GridSpec& grid, std::span<const double> values, double sigma,
                                     std::optional<std::vector<double>> alpha = std::nullopt);

// Cube out to where f0 < 1e-12 with the default point count (or `points_per_axis`).
GridSpec working_grid(const TestDensity& f0, int points_per_axis = 0);

// sum |d_k| |log sigma|^{-k./2}; the construction requires it below 1/2.
double smallness_sum(int dimension, double beta, double sigma);

// Largest delta in {1, 1/2, 1/4, ...} with a finite tail-window estimate of P0 f0^{-delta}.
double detect_delta(const TestDensity& f0);

struct TruncationInfo {
  double epsilon = 0.0;
  double delta = 0.0;
  double threshold = 0.0;       // E = {f0 >= threshold}
  double a0 = 0.0;
  double a_sigma = 0.0;
  bool contained = false;       // E inside the ball of radius a_sigma
  double outside_mass = 0.0;    // P0(E^c)
  double removed_mass = 0.0;    // mass of h outside E
  double renormalizer = 1.0;    // 1 - removed_mass
};

class ConstructedDensity {
 public:
  enum class Stage { GSigma, HSigma, HTildeSigma };

  ConstructedDensity(Stage stage, TransformedFunction transformed, double normalizer);

  Stage stage() const { return stage_; }
  const TransformedFunction& transformed() const { return transformed_; }
  double normalizer() const { return normalizer_; }  // c_sigma = integral of g_sigma
  double indicator_mass = 0.0;                       // P0{f_sigma < f0 / 2}
  double clipped_mass = 0.0;                         // mass added by clipping g_sigma at zero
  std::optional<TruncationInfo> truncation;

  double evaluate(std::span<const double> x) const;
  // Correction g_sigma - f_sigma at x (non-negative).
  double correction(std::span<const double> x) const;
  // K_sigma applied to this density at every grid point.
  std::vector<double> smoothed_on_grid(const GridSpec& grid) const;

  ConstructedDensity with_stage(Stage stage) const;

 private:
  Stage stage_;
  TransformedFunction transformed_;
  double normalizer_;
};

// Precondition: smallness_sum < 1/2 (PreconditionError otherwise).
ConstructedDensity construct_g_sigma(std::shared_ptr<const TestDensity> f0, double beta, double sigma,
                                     const GridSpec& grid);
ConstructedDensity construct_h_sigma(std::shared_ptr<const TestDensity> f0, double beta, double sigma,
                                     const GridSpec& grid);
// Restriction of h_sigma to {f0 >= sigma^{(4 beta + 2 eps + 8)/delta}}, renormalized.
// Tail parameters default to f0.tail(); delta to detect_delta(f0).
ConstructedDensity truncate_to_compact(const ConstructedDensity& h, double epsilon,
                                       std::optional<TailParameters> tail = std::nullopt,
                                       std::optional<double> delta = std::nullopt);

enum class ErrorNorm { SupWeighted, Hellinger };
std::string to_string(ErrorNorm norm);

struct ScanRow {
  double sigma = 0.0;
  double error = 0.0;
  double slope_so_far = 0.0;  // NaN for the first row
};

struct ScanReport {
  Json density;
  ErrorNorm norm = ErrorNorm::SupWeighted;
  double beta = 0.0;
  bool spans_decade = false;
  std::vector<ScanRow> rows;
  double slope = 0.0;
  Json header() const;
  std::string to_csv() const;
};

// sigmas: at least four, strictly decreasing, below (2 tau0)^{-1/2}.
ScanReport approximation_error_scan(std::shared_ptr<const TestDensity> f0, double beta,
                                    const std::vector<double>& sigmas, ErrorNorm norm, const GridSpec& grid,
                                    int workers = 1);

struct HellingerOrderRow {
  double sigma = 0.0;
  double hellinger_h = 0.0;        // d_H(f0, K h_sigma)
  double hellinger_htilde = 0.0;   // d_H(f0, K h~_sigma)
  double normalizer_excess = 0.0;  // (c_sigma - 1) / sigma^{2 beta}
  double indicator_mass = 0.0;
  double clipped_mass = 0.0;
  double outside_mass = 0.0;       // P0(E^c)
  double outside_ratio = 0.0;      // P0(E^c) / sigma^{4 beta + 2 eps + 8}
  double a_sigma = 0.0;
  bool contained = false;
  double truncation_distance = 0.0;  // d_H(K h, K h~) on the grid
  double truncation_bound = 0.0;     // exact d_H(h, h~)
  double truncation_ratio = 0.0;     // truncation_bound / sigma^{beta + eps/2}
};

struct HellingerOrderReport {
  Json density;
  double beta = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::vector<HellingerOrderRow> rows;
  double slope_h = 0.0;
  double slope_htilde = 0.0;
  Json to_json() const;
  std::string to_csv() const;
};

HellingerOrderReport hellinger_order_scan(std::shared_ptr<const TestDensity> f0, double beta, double epsilon,
                                          const std::vector<double>& sigmas, const GridSpec& grid, int workers = 1);

}  // namespace dpmlab
