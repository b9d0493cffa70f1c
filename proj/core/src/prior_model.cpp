#include "dpmlab/prior_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "dpmlab/divergences.hpp"
#include "dpmlab/parallel.hpp"
#include "dpmlab/stats.hpp"

namespace dpmlab {

namespace {

constexpr std::size_t kChunk = 4096;
constexpr int kMaxCovarianceRetries = 100;

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto r = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(r, r);
  for (Eigen::Index a = 0; a < r; ++a)
    for (Eigen::Index b = 0; b < r; ++b) m(a, b) = j.at(static_cast<std::size_t>(a)).at(static_cast<std::size_t>(b)).get<double>();
  return m;
}

CovariancePriorKind kind_from_string(const std::string& s) {
  if (s == "inverse_wishart") return CovariancePriorKind::InverseWishart;
  if (s == "inverse_gamma_diagonal") return CovariancePriorKind::InverseGammaDiagonal;
  if (s == "squared_inverse_gamma_diagonal") return CovariancePriorKind::SquaredInverseGammaDiagonal;
  throw std::invalid_argument("unknown covariance prior kind: " + s);
}

// Runs body(rng, i) for i in [0, n) with one stream per fixed-size chunk, so
// results do not depend on the worker count.
template <typename Body>
void chunked_draws(std::size_t n, std::uint64_t seed, int workers, Body body) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, workers, [&](std::size_t c) {
    Rng rng = make_stream(seed, c);
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) body(rng, i);
  });
}

std::vector<double> geometric_levels(double hi, double lo, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(hi * std::pow(lo / hi, static_cast<double>(i) / (count - 1)));
  return out;
}

double exceedance(const std::vector<double>& sorted, double x) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

double below(const std::vector<double>& sorted, double x) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

double binomial_se(double p, std::size_t n) { return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n)); }

ExponentFit power_law_fit(const std::vector<double>& x, const std::vector<double>& p) {
  std::vector<double> xs, ps;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (p[i] > 0.0 && x[i] > 0.0) {
      xs.push_back(x[i]);
      ps.push_back(p[i]);
    }
  ExponentFit f;
  f.points = xs.size();
  if (xs.size() < 4) {
    f.degenerate = true;
    return f;
  }
  const auto lf = fit_loglog(xs, ps);
  f.value = lf.slope;
  f.lower = lf.slope - 1.96 * lf.slope_stderr;
  f.upper = lf.slope + 1.96 * lf.slope_stderr;
  return f;
}

}  // namespace

std::string to_string(CovariancePriorKind kind) {
  switch (kind) {
    case CovariancePriorKind::InverseWishart:
      return "inverse_wishart";
    case CovariancePriorKind::InverseGammaDiagonal:
      return "inverse_gamma_diagonal";
    case CovariancePriorKind::SquaredInverseGammaDiagonal:
      return "squared_inverse_gamma_diagonal";
  }
  return "unknown";
}

PriorSpec PriorSpec::inverse_wishart(int dimension, double dof, const Eigen::MatrixXd& scale, double base_sd,
                                     double total_mass) {
  PriorSpec s;
  s.base_mean = Eigen::VectorXd::Zero(dimension);
  s.base_covariance = base_sd * base_sd * Eigen::MatrixXd::Identity(dimension, dimension);
  s.total_mass = total_mass;
  s.kind = CovariancePriorKind::InverseWishart;
  s.dof = dof;
  s.scale = scale;
  s.validate();
  return s;
}

PriorSpec PriorSpec::diagonal(int dimension, CovariancePriorKind kind, double shape, double rate, double base_sd,
                              double total_mass) {
  if (kind == CovariancePriorKind::InverseWishart) throw std::invalid_argument("PriorSpec::diagonal: use inverse_wishart");
  PriorSpec s;
  s.base_mean = Eigen::VectorXd::Zero(dimension);
  s.base_covariance = base_sd * base_sd * Eigen::MatrixXd::Identity(dimension, dimension);
  s.total_mass = total_mass;
  s.kind = kind;
  s.shape = shape;
  s.rate = rate;
  s.scale = Eigen::MatrixXd::Identity(dimension, dimension);
  s.validate();
  return s;
}

void PriorSpec::validate() const {
  const int d = dimension();
  if (d < 1) throw std::invalid_argument("PriorSpec: dimension must be >= 1");
  if (base_covariance.rows() != d || base_covariance.cols() != d)
    throw std::invalid_argument("PriorSpec: base covariance has the wrong shape");
  (void)CovarianceSpec::from_matrix(base_covariance);
  if (!(total_mass > 0.0) || !std::isfinite(total_mass)) throw std::invalid_argument("PriorSpec: |alpha| must be positive");
  if (kind == CovariancePriorKind::InverseWishart) {
    if (!(dof > d - 1)) throw std::invalid_argument("PriorSpec: inverse-Wishart needs nu > d - 1");
    if (scale.rows() != d || scale.cols() != d) throw std::invalid_argument("PriorSpec: scale matrix has the wrong shape");
    (void)CovarianceSpec::from_matrix(scale);
  } else if (!(shape > 0.0) || !(rate > 0.0)) {
    throw std::invalid_argument("PriorSpec: inverse-gamma shape and rate must be positive");
  }
}

Json PriorSpec::to_json() const {
  Json j{{"base_mean", std::vector<double>(base_mean.data(), base_mean.data() + base_mean.size())},
         {"base_covariance", matrix_json(base_covariance)},
         {"total_mass", total_mass},
         {"kind", to_string(kind)},
         {"kappa", kappa()}};
  if (kind == CovariancePriorKind::InverseWishart) {
    j["dof"] = dof;
    j["scale"] = matrix_json(scale);
  } else {
    j["shape"] = shape;
    j["rate"] = rate;
  }
  return j;
}

PriorSpec PriorSpec::from_json(const Json& j) {
  PriorSpec s;
  const auto mean = j.at("base_mean").get<std::vector<double>>();
  s.base_mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  s.base_covariance = matrix_from_json(j.at("base_covariance"));
  s.total_mass = j.at("total_mass").get<double>();
  s.kind = kind_from_string(j.at("kind").get<std::string>());
  const int d = s.dimension();
  if (s.kind == CovariancePriorKind::InverseWishart) {
    s.dof = j.at("dof").get<double>();
    s.scale = matrix_from_json(j.at("scale"));
  } else {
    s.shape = j.at("shape").get<double>();
    s.rate = j.at("rate").get<double>();
    s.scale = Eigen::MatrixXd::Identity(d, d);
  }
  if (j.contains("kappa") && j.at("kappa").get<int>() != s.kappa())
    throw std::invalid_argument("PriorSpec: kappa tag does not match the covariance prior");
  s.validate();
  return s;
}

Eigen::MatrixXd draw_precision(const PriorSpec& spec, Rng& rng) {
  const int d = spec.dimension();
  if (spec.kind == CovariancePriorKind::InverseWishart) {
    const Eigen::MatrixXd psi_inv = spec.scale.inverse();
    const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(psi_inv).matrixL();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      a(i, i) = std::sqrt(draw_chi_squared(rng, spec.dof - i));
      for (int j = 0; j < i; ++j) a(i, j) = draw_normal(rng);
    }
    const Eigen::MatrixXd la = l * a;
    return la * la.transpose();
  }
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    const double g = draw_gamma(rng, spec.shape, spec.rate);
    p(j, j) = spec.kind == CovariancePriorKind::InverseGammaDiagonal ? g : g * g;
  }
  return p;
}

CovarianceDraw draw_covariance(const PriorSpec& spec, Rng& rng) {
  int retries = 0;
  while (true) {
    const Eigen::MatrixXd p = draw_precision(spec, rng);
    try {
      if (spec.kind != CovariancePriorKind::InverseWishart)
        return {CovarianceSpec::diagonal(p.diagonal().cwiseInverse()), retries};
      Eigen::MatrixXd s = p.inverse();
      s = 0.5 * (s + s.transpose());
      return {CovarianceSpec::from_matrix(s), retries};
    } catch (const NotPositiveDefinite&) {
      if (++retries > kMaxCovarianceRetries)
        throw std::runtime_error("draw_covariance: no positive-definite draw after 100 retries");
    }
  }
}

Eigen::VectorXd draw_base_atom(const PriorSpec& spec, Rng& rng) {
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(spec.base_covariance).matrixL();
  return spec.base_mean + l * draw_standard_normal_vector(rng, spec.dimension());
}

MixingMeasure StickBreakingDraw::measure() const {
  MixingMeasure m;
  m.atoms = atoms;
  m.weights = weights;
  if (!m.weights.empty()) m.weights.back() += remainder;
  return m;
}

StickBreakingDraw draw_sticks(int truncation, double total_mass, Rng& rng) {
  if (truncation < 1) throw std::invalid_argument("draw_sticks: H must be >= 1");
  if (!(total_mass > 0.0)) throw std::invalid_argument("draw_sticks: |alpha| must be positive");
  StickBreakingDraw s;
  s.truncation = truncation;
  double rest = 1.0;
  for (int h = 0; h < truncation; ++h) {
    const double v = draw_beta(rng, 1.0, total_mass);
    s.sticks.push_back(v);
    s.weights.push_back(v * rest);
    rest *= 1.0 - v;
  }
  s.remainder = rest;
  return s;
}

PriorDraw sample_prior_density(const PriorSpec& spec, int truncation, Rng& rng) {
  spec.validate();
  PriorDraw out{draw_sticks(truncation, spec.total_mass, rng), CovarianceSpec::isotropic(spec.dimension(), 1.0), nullptr, 0};
  for (int h = 0; h < truncation; ++h) out.sticks.atoms.push_back(draw_base_atom(spec, rng));
  auto cov = draw_covariance(spec, rng);
  out.covariance = cov.covariance;
  out.covariance_retries = cov.retries;
  out.density = make_gaussian_mixture(out.sticks.measure(), out.covariance);
  return out;
}

StickTailProbability stick_tail_probability(int truncation, double total_mass, double epsilon) {
  if (truncation < 1 || !(total_mass > 0.0) || !(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("stick_tail_probability: need H >= 1, |alpha| > 0, eps in (0, 1)");
  // -log(1 - V_h) ~ Exp(|alpha|), so -log(remainder) ~ Gamma(H, |alpha|).
  const double l = std::log(1.0 / epsilon);
  StickTailProbability r;
  r.exact = boost::math::gamma_p(static_cast<double>(truncation), total_mass * l);
  r.stirling_bound = std::pow(std::numbers::e * total_mass * l / truncation, truncation);
  r.bound_applies = truncation >= std::numbers::e * total_mass * l;
  return r;
}

MonteCarloEstimate stick_tail_monte_carlo(int truncation, double total_mass, double epsilon, std::size_t draws,
                                          std::uint64_t seed) {
  if (draws == 0) throw std::invalid_argument("stick_tail_monte_carlo: draws must be positive");
  std::vector<char> hit(draws, 0);
  chunked_draws(draws, seed, 1, [&](Rng& rng, std::size_t i) {
    hit[i] = draw_sticks(truncation, total_mass, rng).remainder > epsilon ? 1 : 0;
  });
  double count = 0.0;
  for (char h : hit) count += h;
  MonteCarloEstimate m;
  m.draws = draws;
  m.estimate = count / static_cast<double>(draws);
  m.standard_error = binomial_se(m.estimate, draws);
  return m;
}

ExponentFit fit_tail_exponent(const std::vector<double>& s, const std::vector<double>& mass, std::size_t samples) {
  if (s.size() != mass.size()) throw std::invalid_argument("fit_tail_exponent: size mismatch");
  std::vector<double> xs, y, w;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(mass[i] > 0.0) || !(s[i] > 0.0)) continue;
    const double se = binomial_se(mass[i], samples);
    xs.push_back(s[i]);
    y.push_back(std::log(mass[i]));
    w.push_back(se > 0.0 ? std::pow(mass[i] / se, 2) : 1.0);
  }
  ExponentFit fit;
  fit.points = xs.size();
  if (xs.size() < 4) {
    fit.degenerate = true;
    return fit;
  }
  const auto n = static_cast<Eigen::Index>(xs.size());
  std::vector<double> grid_e, rss;
  for (double e = 0.05; e <= 3.0 + 1e-12; e += 0.005) {
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double sw = std::sqrt(w[k]);
      a(i, 0) = sw;
      a(i, 1) = sw * std::log(xs[k]);
      a(i, 2) = sw * std::pow(xs[k], e);
      b(i) = sw * y[k];
    }
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
    grid_e.push_back(e);
    rss.push_back((a * coef - b).squaredNorm());
  }
  const auto best = static_cast<std::size_t>(std::min_element(rss.begin(), rss.end()) - rss.begin());
  fit.value = grid_e[best];
  fit.lower = fit.upper = fit.value;
  for (std::size_t i = 0; i < rss.size(); ++i) {
    if (rss[i] <= rss[best] + 3.84) {
      fit.lower = std::min(fit.lower, grid_e[i]);
      fit.upper = std::max(fit.upper, grid_e[i]);
    }
  }
  return fit;
}

std::string TailLadder::to_csv() const {
  CsvTable t({"x", "estimate", "stderr"});
  for (std::size_t i = 0; i < x.size(); ++i) t.add_row({x[i], estimate[i], standard_error[i]});
  const Json h = summary();
  return t.to_string(&h);
}

Json TailLadder::summary() const {
  return Json{{"condition", condition},      {"fitted", fit.value},       {"ci_lower", fit.lower},
              {"ci_upper", fit.upper},       {"points", fit.points},      {"degenerate", fit.degenerate},
              {"expected", expected}};
}

Json PriorTailReport::to_json() const {
  return Json{{"prior", prior},
              {"samples", samples},
              {"base_tail", base_tail.summary()},
              {"largest_precision", largest_precision.summary()},
              {"smallest_precision", smallest_precision.summary()},
              {"band_mass", band_mass.summary()}};
}

PriorTailReport verify_prior_tails(const PriorSpec& spec, std::size_t samples, std::uint64_t seed, double band_width,
                                   int workers) {
  spec.validate();
  if (samples < 10000) throw std::invalid_argument("verify_prior_tails: need at least 10^4 samples");
  if (!(band_width > 0.0 && band_width < 1.0)) throw std::invalid_argument("verify_prior_tails: t must lie in (0, 1)");
  const int d = spec.dimension();
  std::vector<double> base_max(samples), eig_min(samples), eig_max(samples);
  chunked_draws(samples, seed, workers, [&](Rng& rng, std::size_t i) {
    base_max[i] = draw_base_atom(spec, rng).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd p = draw_precision(spec, rng);
    if (d == 1) {
      eig_min[i] = eig_max[i] = p(0, 0);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p, Eigen::EigenvaluesOnly);
      eig_min[i] = es.eigenvalues()(0);
      eig_max[i] = es.eigenvalues()(d - 1);
    }
  });

  PriorTailReport r;
  r.prior = spec.to_json();
  r.samples = samples;
  const double n = static_cast<double>(samples);
  const double far = 50.0 / n;

  auto sorted_base = base_max;
  std::sort(sorted_base.begin(), sorted_base.end());
  auto sorted_min = eig_min;
  std::sort(sorted_min.begin(), sorted_min.end());
  auto sorted_max = eig_max;
  std::sort(sorted_max.begin(), sorted_max.end());

  const auto upper_ladder = [&](TailLadder& ladder, const std::vector<double>& sorted, double top) {
    for (double p : geometric_levels(top, far, 10)) {
      const double x = quantile(sorted, 1.0 - p);
      if (!ladder.x.empty() && x <= ladder.x.back()) continue;
      const double est = exceedance(sorted, x);
      ladder.x.push_back(x);
      ladder.estimate.push_back(est);
      ladder.standard_error.push_back(binomial_se(est, samples));
    }
    ladder.fit = fit_tail_exponent(ladder.x, ladder.estimate, samples);
  };

  r.base_tail.condition = "base_tail";
  r.base_tail.expected = 2.0;
  upper_ladder(r.base_tail, sorted_base, 0.2);

  r.largest_precision.condition = "largest_precision";
  r.largest_precision.expected = spec.kind == CovariancePriorKind::SquaredInverseGammaDiagonal ? 0.5 : 1.0;
  upper_ladder(r.largest_precision, sorted_max, 0.3);

  r.smallest_precision.condition = "smallest_precision";
  switch (spec.kind) {
    case CovariancePriorKind::InverseWishart:
      r.smallest_precision.expected = 0.5 * (spec.dof + 1.0 - d);
      break;
    case CovariancePriorKind::InverseGammaDiagonal:
      r.smallest_precision.expected = spec.shape;
      break;
    case CovariancePriorKind::SquaredInverseGammaDiagonal:
      r.smallest_precision.expected = 0.5 * spec.shape;
      break;
  }
  for (double p : geometric_levels(0.05, far, 10)) {
    const double x = quantile(sorted_min, p);
    if (!r.smallest_precision.x.empty() && x >= r.smallest_precision.x.back()) continue;
    const double est = below(sorted_min, x);
    r.smallest_precision.x.push_back(x);
    r.smallest_precision.estimate.push_back(est);
    r.smallest_precision.standard_error.push_back(binomial_se(est, samples));
  }
  r.smallest_precision.fit = power_law_fit(r.smallest_precision.x, r.smallest_precision.estimate);

  r.band_mass.condition = "band_mass";
  r.band_mass.expected = spec.kappa();
  for (double p : geometric_levels(0.5, 2.0 * far, 14)) {
    const double s = quantile(sorted_max, 1.0 - p);
    if (!r.band_mass.x.empty() && s <= r.band_mass.x.back()) continue;
    std::size_t count = 0;
    for (std::size_t i = 0; i < samples; ++i)
      if (eig_min[i] > s && eig_max[i] < s * (1.0 + band_width)) ++count;
    const double est = static_cast<double>(count) / n;
    r.band_mass.x.push_back(s);
    r.band_mass.estimate.push_back(est);
    r.band_mass.standard_error.push_back(binomial_se(est, samples));
  }
  // The band mass decays like exp(-C s^{kappa/2}); report kappa itself.
  r.band_mass.fit = fit_tail_exponent(r.band_mass.x, r.band_mass.estimate, samples);
  r.band_mass.fit.value *= 2.0;
  r.band_mass.fit.lower *= 2.0;
  r.band_mass.fit.upper *= 2.0;
  return r;
}

Json WishartFactsReport::to_json() const {
  Json j{{"dof", dof},
         {"dimension", dimension},
         {"samples", samples},
         {"trace_mean", trace_mean},
         {"trace_mean_stderr", trace_mean_stderr},
         {"trace_expected", trace_expected},
         {"ks_statistic", ks_statistic},
         {"ks_p_value", ks_p_value},
         {"verdict", ks_pass ? "pass" : "fail"},
         {"small_eigen_power", small_eigen_power.value},
         {"small_eigen_ci", {small_eigen_power.lower, small_eigen_power.upper}},
         {"small_eigen_expected", small_eigen_expected},
         {"small_eigen_stated", small_eigen_stated}};
  if (inverse_gamma_ks_p) j["inverse_gamma_ks_p"] = *inverse_gamma_ks_p;
  return j;
}

WishartFactsReport check_wishart_facts(double dof, const Eigen::MatrixXd& scale, std::size_t samples, std::uint64_t seed) {
  const int d = static_cast<int>(scale.rows());
  PriorSpec spec = PriorSpec::inverse_wishart(d, dof, scale);
  if (samples < 100) throw std::invalid_argument("check_wishart_facts: too few samples");
  const Eigen::MatrixXd root = Eigen::LLT<Eigen::MatrixXd>(scale).matrixL();

  std::vector<double> trace(samples), small(samples), variance(samples);
  chunked_draws(samples, seed, 1, [&](Rng& rng, std::size_t i) {
    const Eigen::MatrixXd p = draw_precision(spec, rng);
    // root^T Sigma^{-1} root ~ Wishart(nu, I).
    const Eigen::MatrixXd w = root.transpose() * p * root;
    trace[i] = w.trace();
    if (d == 1) {
      small[i] = w(0, 0);
      variance[i] = 1.0 / p(0, 0);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
      small[i] = es.eigenvalues()(0);
    }
  });

  WishartFactsReport r;
  r.dof = dof;
  r.dimension = d;
  r.samples = samples;
  r.trace_mean = mean(trace);
  r.trace_mean_stderr = standard_error(trace);
  r.trace_expected = dof * d;
  const boost::math::chi_squared_distribution<double> chi(dof * d);
  const auto ks = ks_test(trace, [&](double x) { return x <= 0.0 ? 0.0 : boost::math::cdf(chi, x); });
  r.ks_statistic = ks.statistic;
  r.ks_p_value = ks.p_value;
  r.ks_pass = ks.p_value >= 1e-3;

  std::sort(small.begin(), small.end());
  std::vector<double> xs, ps;
  for (double p : geometric_levels(0.05, std::max(50.0 / static_cast<double>(samples), 1e-6), 8)) {
    const double x = quantile(small, p);
    if (!xs.empty() && x >= xs.back()) continue;
    xs.push_back(x);
    ps.push_back(below(small, x));
  }
  r.small_eigen_power = power_law_fit(xs, ps);
  r.small_eigen_expected = 0.5 * (dof + 1.0 - d);
  r.small_eigen_stated = 0.5 * (dof + 3.0 - d);

  if (d == 1) {
    const boost::math::inverse_gamma_distribution<double> ig(0.5 * dof, 0.5 * scale(0, 0));
    r.inverse_gamma_ks_p = ks_test(variance, [&](double x) { return x <= 0.0 ? 0.0 : boost::math::cdf(ig, x); }).p_value;
  }
  return r;
}

Json KlBallMass::to_json() const {
  Json j{{"draws", draws},
         {"hits", hits},
         {"support_failures", support_failures},
         {"estimate", estimate},
         {"stderr", standard_error},
         {"radius", radius},
         {"log_mass", log_mass},
         {"predicted_shape", predicted_shape}};
  if (upper_bound) j["upper_bound"] = *upper_bound;
  return j;
}

KlBallMass estimate_kl_ball_mass(const PriorSpec& spec, const TestDensity& f0, double epsilon, double a,
                                 std::size_t draws, int truncation, const GridSpec& grid, std::uint64_t seed,
                                 const KlBallOptions& options) {
  spec.validate();
  if (!(epsilon > 0.0) || !(a > 0.0) || draws == 0)
    throw std::invalid_argument("estimate_kl_ball_mass: eps, A and draws must be positive");
  if (f0.dimension() != spec.dimension()) throw std::invalid_argument("estimate_kl_ball_mass: dimension mismatch");
  const auto f = f0.values_on_grid(grid);
  const double radius = a * epsilon * epsilon;

  std::vector<char> hit(draws, 0), failed(draws, 0);
  parallel_for(draws, options.workers, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    const auto draw = sample_prior_density(spec, truncation, rng);
    const auto p = draw.density->values_on_grid(grid);
    try {
      const auto m = kl_moments_on_grid(grid, f, p);
      hit[i] = (m.first <= radius && m.second <= radius) ? 1 : 0;
    } catch (const SupportMismatch&) {
      failed[i] = 1;
    }
  });

  KlBallMass r;
  r.draws = draws;
  for (std::size_t i = 0; i < draws; ++i) {
    r.hits += static_cast<std::size_t>(hit[i]);
    r.support_failures += static_cast<std::size_t>(failed[i]);
  }
  r.radius = radius;
  r.estimate = static_cast<double>(r.hits) / static_cast<double>(draws);
  r.standard_error = binomial_se(r.estimate, draws);
  if (r.hits == 0) r.upper_bound = 1.0 - std::pow(0.05, 1.0 / static_cast<double>(draws));
  r.log_mass = r.hits > 0 ? std::log(r.estimate) : std::log(*r.upper_bound);

  const double beta = options.beta.value_or(f0.smoothness());
  const double tau = options.tau.value_or(f0.tail().tau);
  const double dstar = std::max<double>(spec.dimension(), spec.kappa());
  const double inv_beta = std::isfinite(beta) ? 1.0 / beta : 0.0;
  const double s = 1.0 + inv_beta + 1.0 / tau;
  r.predicted_shape = std::pow(epsilon, -dstar * inv_beta) * std::pow(std::log(1.0 / epsilon), s * dstar + 1.0);
  return r;
}

}  // namespace dpmlab
