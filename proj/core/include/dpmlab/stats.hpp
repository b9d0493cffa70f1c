#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace dpmlab {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

// Ordinary least squares of y on x. Requires at least two distinct x values.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// Slope of log(y) against log(x).
LinearFit fit_loglog(std::span<const double> x, std::span<const double> y);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample Kolmogorov-Smirnov test; p-value from the asymptotic Kolmogorov
// law with the Stephens small-sample correction.
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);
double kolmogorov_survival(double lambda);

double mean(std::span<const double> v);
double sample_variance(std::span<const double> v);
double standard_error(std::span<const double> v);

// Type-7 empirical quantile (linear interpolation between order statistics).
double quantile(std::vector<double> v, double q);

struct ConfidenceInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Percentile bootstrap of a statistic computed on resampled groups. Each
// resample draws groups.size() groups with replacement; `statistic` sees the
// chosen group indices.
ConfidenceInterval bootstrap_ci(std::size_t groups,
                                const std::function<double(const std::vector<std::size_t>&)>& statistic,
                                int resamples, double level, std::uint64_t seed);

}  // namespace dpmlab
