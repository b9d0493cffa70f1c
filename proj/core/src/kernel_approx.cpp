#include "dpmlab/kernel_approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <utility>

#include "dpmlab/divergences.hpp"
#include "dpmlab/parallel.hpp"
#include "dpmlab/stats.hpp"

namespace dpmlab {

namespace {

const CoefficientTable& cached_table(int dimension, int max_order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<CoefficientTable>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{dimension, max_order}];
  if (!slot) slot = std::make_unique<CoefficientTable>(cd_coefficients(dimension, max_order));
  return *slot;
}

std::vector<double> resolve_alpha(int d, const std::optional<std::vector<double>>& alpha) {
  if (!alpha) return std::vector<double>(static_cast<std::size_t>(d), 1.0);
  if (alpha->size() != static_cast<std::size_t>(d))
    throw std::invalid_argument("anisotropy vector has the wrong length");
  double total = 0.0;
  for (double a : *alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("anisotropy weights must be positive");
    total += a;
  }
  if (std::abs(total - d) > 1e-9 * d) throw std::invalid_argument("anisotropy weights must average to one");
  return *alpha;
}

std::vector<double> per_axis_sd(double sigma, const std::vector<double>& alpha) {
  std::vector<double> sd(alpha.size());
  for (std::size_t j = 0; j < alpha.size(); ++j) sd[j] = std::pow(sigma, alpha[j]);
  return sd;
}

// g_sigma before normalization: f_sigma plus f0/2 where f_sigma < f0/2, clipped at zero.
double lifted(double f0, double fs) {
  const double g = fs < 0.5 * f0 ? fs + 0.5 * f0 : fs;
  return std::max(g, 0.0);
}

bool any_nonzero(const std::vector<double>& v) {
  return std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
}

double truncation_threshold(double beta, double epsilon, double delta, double sigma) {
  return std::pow(sigma, (4.0 * beta + 2.0 * epsilon + 8.0) / delta);
}

GridSpec extended_grid(const TestDensity& f0, double radius) {
  const int d = f0.dimension();
  const int n = d == 1 ? (1 << 14) : d == 2 ? 1024 : 64;
  return GridSpec::cube(d, radius, n);
}

void require_ladder(const std::vector<double>& sigmas) {
  if (sigmas.size() < 4) throw std::invalid_argument("scan needs at least four bandwidths");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0) || !std::isfinite(sigmas[i]))
      throw std::invalid_argument("bandwidths must be positive and finite");
    if (i > 0 && !(sigmas[i] < sigmas[i - 1]))
      throw std::invalid_argument("bandwidths must be strictly decreasing");
  }
}

}  // namespace

TransformedFunction::TransformedFunction(std::shared_ptr<const TestDensity> f0, double beta, double sigma,
                                         std::optional<std::vector<double>> alpha)
    : f0_(std::move(f0)), beta_(beta), sigma_(sigma), anisotropic_(alpha.has_value()) {
  if (!f0_) throw std::invalid_argument("TransformedFunction: null density");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("TransformedFunction: beta must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("TransformedFunction: sigma must be positive");
  const int d = f0_->dimension();
  alpha_ = resolve_alpha(d, alpha);

  const auto indices = transform_indices(d, beta, alpha_);
  int max_order = 0;
  for (const auto& k : indices) max_order = std::max(max_order, k.order());
  if (max_order > 0) {
    const auto& table = cached_table(d, max_order);
    for (const auto& k : indices) {
      const double dk = table.d(k);
      if (dk == 0.0) continue;
      if (!f0_->supports_derivative(k))
        throw UnsupportedOrder("density " + f0_->id() + " has no derivative of order " + k.to_string());
      terms_.push_back({k, dk * std::pow(sigma, k.weighted_order(alpha_))});
    }
  }
  const auto sd = kernel_sd();
  smoothed_base_ = f0_->smoothed(sd);
}

std::vector<double> TransformedFunction::kernel_sd() const { return per_axis_sd(sigma_, alpha_); }

double TransformedFunction::evaluate(std::span<const double> x) const {
  double v = f0_->evaluate(x);
  for (const auto& t : terms_) v -= t.weight * f0_->derivative(t.index, x);
  return v;
}

double TransformedFunction::smoothed(std::span<const double> x) const {
  if (!smoothed_base_) throw std::logic_error("TransformedFunction: no closed-form smoothing for " + f0_->id());
  double v = smoothed_base_->evaluate(x);
  for (const auto& t : terms_) v -= t.weight * smoothed_base_->derivative(t.index, x);
  return v;
}

std::vector<double> TransformedFunction::values_on_grid(const GridSpec& grid) const {
  auto out = f0_->values_on_grid(grid);
  for (const auto& t : terms_) {
    const auto dk = f0_->derivative_on_grid(t.index, grid);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= t.weight * dk[i];
  }
  return out;
}

std::vector<double> TransformedFunction::smoothed_on_grid(const GridSpec& grid) const {
  if (!smoothed_base_) {
    const auto v = values_on_grid(grid);
    return convolve_on_grid(grid, v, sigma_, alpha_);
  }
  auto out = smoothed_base_->values_on_grid(grid);
  for (const auto& t : terms_) {
    const auto dk = smoothed_base_->derivative_on_grid(t.index, grid);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= t.weight * dk[i];
  }
  return out;
}

TransformedFunction apply_transform(std::shared_ptr<const TestDensity> f0, double beta, double sigma,
                                    std::optional<std::vector<double>> alpha) {
  return TransformedFunction(std::move(f0), beta, sigma, std::move(alpha));
}

std::shared_ptr<const DifferentiableFunction> convolve(const TestDensity& f, double sigma,
                                                       std::optional<std::vector<double>> alpha) {
  if (!(sigma > 0.0)) throw std::invalid_argument("convolve: sigma must be positive");
  const auto sd = per_axis_sd(sigma, resolve_alpha(f.dimension(), alpha));
  return f.smoothed(sd);
}

std::vector<double> convolve_on_grid(const GridSpec& grid, std::span<const double> values, double sigma,
                                     std::optional<std::vector<double>> alpha) {
  if (!(sigma > 0.0)) throw std::invalid_argument("convolve_on_grid: sigma must be positive");
  const auto sd = per_axis_sd(sigma, resolve_alpha(grid.dimension(), alpha));
  return gaussian_smooth(grid, values, sd);
}

GridSpec working_grid(const TestDensity& f0, int points_per_axis) {
  const int d = f0.dimension();
  const int n = points_per_axis > 0 ? points_per_axis : GridSpec::default_points_per_axis(d);
  return GridSpec::cube(d, f0.tail_radius(1e-12), n);
}

double smallness_sum(int dimension, double beta, double sigma) {
  const std::vector<double> ones(static_cast<std::size_t>(dimension), 1.0);
  const auto indices = transform_indices(dimension, beta, ones);
  int max_order = 0;
  for (const auto& k : indices) max_order = std::max(max_order, k.order());
  if (max_order == 0) return 0.0;
  const auto& table = cached_table(dimension, max_order);
  const double log_inv = std::abs(std::log(sigma));
  double s = 0.0;
  for (const auto& k : indices) s += std::abs(table.d(k)) * std::pow(log_inv, -0.5 * k.order());
  return s;
}

double detect_delta(const TestDensity& f0) {
  const int d = f0.dimension();
  const double radius = 2.0 * f0.tail_radius(1e-12);
  const int n = d == 1 ? 4096 : d == 2 ? 256 : 32;
  const GridSpec grid = GridSpec::cube(d, radius, n);
  const auto f = f0.values_on_grid(grid);
  std::vector<double> x(static_cast<std::size_t>(d));
  const double cell = [&] {
    double c = 1.0;
    for (int j = 0; j < d; ++j) c *= grid.spacing(j);
    return c;
  }();
  for (double delta = 1.0; delta >= 1.0 / 64.0; delta *= 0.5) {
    double inner = 0.0;
    double full = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!(f[i] > 0.0)) continue;
      grid.point(i, x);
      double reach = 0.0;
      for (double xj : x) reach = std::max(reach, std::abs(xj));
      const double term = std::pow(f[i], 1.0 - delta) * cell;
      full += term;
      if (reach <= 0.75 * radius) inner += term;
    }
    if (full - inner <= 1e-3 * full) return delta;
  }
  throw std::runtime_error("detect_delta: P0 f0^{-delta} grows with the window for every delta >= 1/64");
}

ConstructedDensity::ConstructedDensity(Stage stage, TransformedFunction transformed, double normalizer)
    : stage_(stage), transformed_(std::move(transformed)), normalizer_(normalizer) {
  if (!(normalizer > 0.0) || !std::isfinite(normalizer))
    throw std::invalid_argument("ConstructedDensity: normalizer must be positive");
}

double ConstructedDensity::correction(std::span<const double> x) const {
  const double f = transformed_.base().evaluate(x);
  const double fs = transformed_.evaluate(x);
  return lifted(f, fs) - fs;
}

double ConstructedDensity::evaluate(std::span<const double> x) const {
  const double f = transformed_.base().evaluate(x);
  const double g = lifted(f, transformed_.evaluate(x));
  switch (stage_) {
    case Stage::GSigma:
      return g;
    case Stage::HSigma:
      return g / normalizer_;
    case Stage::HTildeSigma:
      if (!truncation) throw std::logic_error("ConstructedDensity: truncated stage without truncation data");
      return f >= truncation->threshold ? g / normalizer_ / truncation->renormalizer : 0.0;
  }
  return g;
}

std::vector<double> ConstructedDensity::smoothed_on_grid(const GridSpec& grid) const {
  auto out = transformed_.smoothed_on_grid(grid);
  const auto f = transformed_.base().values_on_grid(grid);
  const auto fs = transformed_.values_on_grid(grid);
  std::vector<double> corr(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) corr[i] = lifted(f[i], fs[i]) - fs[i];
  const auto sd = transformed_.kernel_sd();
  if (any_nonzero(corr)) {
    const auto kc = gaussian_smooth(grid, corr, sd);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += kc[i];
  }
  if (stage_ == Stage::GSigma) return out;
  for (double& v : out) v /= normalizer_;
  if (stage_ == Stage::HSigma) return out;

  if (!truncation) throw std::logic_error("ConstructedDensity: truncated stage without truncation data");
  std::vector<double> removed(f.size(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] < truncation->threshold) removed[i] = lifted(f[i], fs[i]) / normalizer_;
  if (any_nonzero(removed)) {
    const auto kr = gaussian_smooth(grid, removed, sd);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= kr[i];
  }
  for (double& v : out) v /= truncation->renormalizer;
  return out;
}

ConstructedDensity ConstructedDensity::with_stage(Stage stage) const {
  ConstructedDensity copy = *this;
  copy.stage_ = stage;
  return copy;
}

ConstructedDensity construct_g_sigma(std::shared_ptr<const TestDensity> f0, double beta, double sigma,
                                     const GridSpec& grid) {
  if (!f0) throw std::invalid_argument("construct_g_sigma: null density");
  const double s = smallness_sum(f0->dimension(), beta, sigma);
  if (!(s < 0.5)) {
    std::ostringstream os;
    os << "construct_g_sigma: sigma = " << sigma << " is too large for beta = " << beta
       << " (coefficient sum " << s << " >= 1/2)";
    throw PreconditionError(os.str());
  }
  TransformedFunction t(std::move(f0), beta, sigma);
  const auto f = t.base().values_on_grid(grid);
  const auto fs = t.values_on_grid(grid);
  std::vector<double> corr(f.size());
  std::vector<double> indicator(f.size());
  std::vector<double> clip(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    corr[i] = lifted(f[i], fs[i]) - fs[i];
    const bool low = fs[i] < 0.5 * f[i];
    indicator[i] = low ? f[i] : 0.0;
    const double raw = low ? fs[i] + 0.5 * f[i] : fs[i];
    clip[i] = std::max(-raw, 0.0);
  }
  // f_sigma integrates to one exactly, so c_sigma = 1 + integral of the correction.
  const double c = 1.0 + integrate(grid, corr);
  ConstructedDensity g(ConstructedDensity::Stage::GSigma, std::move(t), c);
  g.indicator_mass = integrate(grid, indicator);
  g.clipped_mass = integrate(grid, clip);
  return g;
}

ConstructedDensity construct_h_sigma(std::shared_ptr<const TestDensity> f0, double beta, double sigma,
                                     const GridSpec& grid) {
  return construct_g_sigma(std::move(f0), beta, sigma, grid).with_stage(ConstructedDensity::Stage::HSigma);
}

ConstructedDensity truncate_to_compact(const ConstructedDensity& h, double epsilon, std::optional<TailParameters> tail,
                                       std::optional<double> delta) {
  if (h.stage() != ConstructedDensity::Stage::HSigma)
    throw std::invalid_argument("truncate_to_compact: expects the normalized stage");
  if (!(epsilon > 0.0)) throw std::invalid_argument("truncate_to_compact: epsilon must be positive");
  const auto& t = h.transformed();
  const TestDensity& f0 = t.base();
  const TailParameters tp = tail ? *tail : f0.tail();
  const double dl = delta ? *delta : detect_delta(f0);
  if (!(dl > 0.0 && dl <= 1.0)) throw std::invalid_argument("truncate_to_compact: delta must lie in (0, 1]");
  if (!(tp.b > 0.0) || !(tp.tau > 0.0)) throw std::invalid_argument("truncate_to_compact: invalid tail parameters");

  const double beta = t.beta();
  const double sigma = t.sigma();
  TruncationInfo info;
  info.epsilon = epsilon;
  info.delta = dl;
  info.threshold = truncation_threshold(beta, epsilon, dl, sigma);
  info.a0 = std::pow((8.0 * beta + 4.0 * epsilon + 16.0) / (tp.b * dl), 1.0 / tp.tau);
  info.a_sigma = info.a0 * std::pow(std::log(1.0 / sigma), 1.0 / tp.tau);

  const double level = std::max(info.threshold, 1e-300);
  const double radius = 1.25 * std::max(info.a_sigma, f0.tail_radius(level));
  const GridSpec ext = extended_grid(f0, radius);
  const auto f = f0.values_on_grid(ext);
  const auto fs = t.values_on_grid(ext);
  std::vector<double> outside(f.size(), 0.0);
  std::vector<double> removed(f.size(), 0.0);
  std::vector<double> x(static_cast<std::size_t>(ext.dimension()));
  bool any_inside = false;
  info.contained = true;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] < info.threshold) {
      outside[i] = f[i];
      removed[i] = lifted(f[i], fs[i]) / h.normalizer();
      continue;
    }
    any_inside = true;
    ext.point(i, x);
    double r2 = 0.0;
    for (double xj : x) r2 += xj * xj;
    if (std::sqrt(r2) > info.a_sigma) info.contained = false;
  }
  if (!any_inside) throw DegenerateTruncation("truncate_to_compact: the set {f0 >= threshold} is empty on the grid");
  info.outside_mass = integrate(ext, outside);
  info.removed_mass = integrate(ext, removed);
  info.renormalizer = 1.0 - info.removed_mass;
  if (!(info.renormalizer > 0.0)) throw DegenerateTruncation("truncate_to_compact: all mass removed");

  ConstructedDensity out = h.with_stage(ConstructedDensity::Stage::HTildeSigma);
  out.truncation = info;
  return out;
}

std::string to_string(ErrorNorm norm) { return norm == ErrorNorm::SupWeighted ? "sup_weighted" : "hellinger"; }

Json ScanReport::header() const {
  return Json{{"density", density},
              {"norm", to_string(norm)},
              {"beta", beta},
              {"spans_decade", spans_decade},
              {"slope", slope}};
}

std::string ScanReport::to_csv() const {
  CsvTable table({"sigma", "error", "slope_so_far"});
  for (const auto& r : rows) table.add_row({r.sigma, r.error, r.slope_so_far});
  const Json h = header();
  return table.to_string(&h);
}

ScanReport approximation_error_scan(std::shared_ptr<const TestDensity> f0, double beta,
                                    const std::vector<double>& sigmas, ErrorNorm norm, const GridSpec& grid,
                                    int workers) {
  if (!f0) throw std::invalid_argument("approximation_error_scan: null density");
  require_ladder(sigmas);
  const double tau0 = f0->tau0();
  if (tau0 > 0.0 && !(sigmas.front() < 1.0 / std::sqrt(2.0 * tau0)))
    throw PreconditionError("approximation_error_scan: largest sigma must lie below (2 tau0)^{-1/2}");

  const auto f = f0->values_on_grid(grid);
  std::vector<double> envelope;
  if (norm == ErrorNorm::SupWeighted) {
    envelope.resize(f.size());
    std::vector<double> x(static_cast<std::size_t>(grid.dimension()));
    for (std::size_t i = 0; i < f.size(); ++i) {
      grid.point(i, x);
      envelope[i] = f0->envelope(x, beta);
    }
  }

  std::vector<double> errors(sigmas.size());
  parallel_for(sigmas.size(), workers, [&](std::size_t s) {
    if (norm == ErrorNorm::SupWeighted) {
      const TransformedFunction t(f0, beta, sigmas[s]);
      const auto kt = t.smoothed_on_grid(grid);
      double worst = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i)
        if (envelope[i] > 0.0) worst = std::max(worst, std::abs(kt[i] - f[i]) / envelope[i]);
      errors[s] = worst;
    } else {
      const auto h = construct_h_sigma(f0, beta, sigmas[s], grid);
      const auto kh = h.smoothed_on_grid(grid);
      errors[s] = hellinger_on_grid(grid, f, kh);
    }
  });

  ScanReport report;
  report.density = f0->describe();
  report.norm = norm;
  report.beta = beta;
  report.spans_decade = sigmas.front() / sigmas.back() >= 10.0 * (1.0 - 1e-12);
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    ScanRow row{sigmas[s], errors[s], std::numeric_limits<double>::quiet_NaN()};
    if (s > 0) {
      const std::span<const double> xs(sigmas.data(), s + 1);
      const std::span<const double> ys(errors.data(), s + 1);
      row.slope_so_far = fit_loglog(xs, ys).slope;
    }
    report.rows.push_back(row);
  }
  report.slope = report.rows.back().slope_so_far;
  return report;
}

Json HellingerOrderReport::to_json() const {
  Json rows_json = Json::array();
  for (const auto& r : rows) {
    rows_json.push_back(Json{{"sigma", r.sigma},
                             {"hellinger_h", r.hellinger_h},
                             {"hellinger_htilde", r.hellinger_htilde},
                             {"normalizer_excess", r.normalizer_excess},
                             {"indicator_mass", r.indicator_mass},
                             {"clipped_mass", r.clipped_mass},
                             {"outside_mass", r.outside_mass},
                             {"outside_ratio", r.outside_ratio},
                             {"a_sigma", r.a_sigma},
                             {"contained", r.contained},
                             {"truncation_distance", r.truncation_distance},
                             {"truncation_bound", r.truncation_bound},
                             {"truncation_ratio", r.truncation_ratio}});
  }
  return Json{{"density", density}, {"beta", beta},       {"epsilon", epsilon},          {"delta", delta},
              {"rows", rows_json},  {"slope_h", slope_h}, {"slope_htilde", slope_htilde}};
}

std::string HellingerOrderReport::to_csv() const {
  CsvTable table({"sigma", "hellinger_h", "hellinger_htilde", "normalizer_excess", "indicator_mass", "clipped_mass",
                  "outside_mass", "outside_ratio", "a_sigma", "contained", "truncation_distance", "truncation_bound",
                  "truncation_ratio"});
  for (const auto& r : rows)
    table.add_row({r.sigma, r.hellinger_h, r.hellinger_htilde, r.normalizer_excess, r.indicator_mass, r.clipped_mass,
                   r.outside_mass, r.outside_ratio, r.a_sigma, r.contained ? 1.0 : 0.0, r.truncation_distance,
                   r.truncation_bound, r.truncation_ratio});
  return table.to_string();
}

HellingerOrderReport hellinger_order_scan(std::shared_ptr<const TestDensity> f0, double beta, double epsilon,
                                          const std::vector<double>& sigmas, const GridSpec& grid, int workers) {
  if (!f0) throw std::invalid_argument("hellinger_order_scan: null density");
  require_ladder(sigmas);
  const double delta = detect_delta(*f0);
  const TailParameters tail = f0->tail();
  const auto f = f0->values_on_grid(grid);

  std::vector<HellingerOrderRow> rows(sigmas.size());
  parallel_for(sigmas.size(), workers, [&](std::size_t s) {
    const double sigma = sigmas[s];
    const auto h = construct_h_sigma(f0, beta, sigma, grid);
    const auto ht = truncate_to_compact(h, epsilon, tail, delta);
    const auto kh = h.smoothed_on_grid(grid);
    const auto kht = ht.smoothed_on_grid(grid);
    const auto& info = *ht.truncation;

    HellingerOrderRow& r = rows[s];
    r.sigma = sigma;
    r.hellinger_h = hellinger_on_grid(grid, f, kh);
    r.hellinger_htilde = hellinger_on_grid(grid, f, kht);
    r.normalizer_excess = (h.normalizer() - 1.0) / std::pow(sigma, 2.0 * beta);
    r.indicator_mass = h.indicator_mass;
    r.clipped_mass = h.clipped_mass;
    r.outside_mass = info.outside_mass;
    r.outside_ratio = info.outside_mass / std::pow(sigma, 4.0 * beta + 2.0 * epsilon + 8.0);
    r.a_sigma = info.a_sigma;
    r.contained = info.contained;
    r.truncation_distance = hellinger_on_grid(grid, kh, kht);
    // h~ = h 1_E / (1 - m) gives d_H^2(h, h~) = 2 - 2 sqrt(1 - m).
    const double m = std::clamp(info.removed_mass, 0.0, 1.0);
    r.truncation_bound = std::sqrt(std::max(0.0, -2.0 * std::expm1(0.5 * std::log1p(-m))));
    r.truncation_ratio = r.truncation_bound / std::pow(sigma, beta + 0.5 * epsilon);
  });

  HellingerOrderReport report;
  report.density = f0->describe();
  report.beta = beta;
  report.epsilon = epsilon;
  report.delta = delta;
  report.rows = rows;
  std::vector<double> hs, hts;
  for (const auto& r : rows) {
    hs.push_back(r.hellinger_h);
    hts.push_back(r.hellinger_htilde);
  }
  report.slope_h = fit_loglog(sigmas, hs).slope;
  report.slope_htilde = fit_loglog(sigmas, hts).slope;
  return report;
}

}  // namespace dpmlab
