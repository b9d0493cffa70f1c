#include "dpmlab/rate_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "dpmlab/divergences.hpp"
#include "dpmlab/kernel_approx.hpp"
#include "dpmlab/measure_discretization.hpp"
#include "dpmlab/parallel.hpp"
#include "dpmlab/sieve_entropy.hpp"
#include "dpmlab/stats.hpp"

namespace dpmlab {

namespace {

std::string prior_kind_name(RatePriorKind k) {
  return k == RatePriorKind::DirichletProcess ? "dirichlet_process" : "finite_mixture";
}

RatePriorKind prior_kind_from_string(const std::string& s) {
  if (s == "dirichlet_process") return RatePriorKind::DirichletProcess;
  if (s == "finite_mixture") return RatePriorKind::FiniteMixture;
  throw std::invalid_argument("unknown rate prior kind: " + s);
}

Json rate_inputs_json(const RateInputs& in) {
  Json j{{"beta", in.beta}, {"dimension", in.dimension}, {"kappa", in.kappa}, {"tau", in.tau},
         {"prior", prior_kind_name(in.prior)}};
  if (in.anisotropy) j["anisotropy"] = *in.anisotropy;
  if (in.prior == RatePriorKind::FiniteMixture) j["tau1"] = in.tau1;
  return j;
}

}  // namespace

double RateFormula::epsilon_n(double n) const {
  if (!(n > 1.0)) throw std::invalid_argument("epsilon_n: n must exceed 1");
  return std::pow(n, -exponent) * std::pow(std::log(n), log_power);
}

Json RateFormula::to_json() const {
  return Json{{"inputs", rate_inputs_json(inputs)},
              {"alpha_max", alpha_max},
              {"effective_dimension", effective_dimension},
              {"exponent", exponent},
              {"log_power", log_power},
              {"finite_mixture_offset", finite_mixture_offset},
              {"axial_smoothness", axial_smoothness}};
}

double harmonic_mean_smoothness(const std::vector<double>& axial) {
  if (axial.empty()) throw std::invalid_argument("harmonic_mean_smoothness: empty input");
  double inv = 0.0;
  for (double b : axial) {
    if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("harmonic_mean_smoothness: smoothness must be positive");
    inv += 1.0 / b;
  }
  return static_cast<double>(axial.size()) / inv;
}

RateFormula theoretical_rate(const RateInputs& in) {
  if (!(in.beta > 0.0) || !std::isfinite(in.beta)) throw std::invalid_argument("theoretical_rate: beta must be positive");
  if (!(in.tau > 0.0) || !std::isfinite(in.tau)) throw std::invalid_argument("theoretical_rate: tau must be positive");
  if (in.dimension < 1) throw std::invalid_argument("theoretical_rate: dimension must be at least 1");
  if (in.kappa != 1 && in.kappa != 2) throw std::invalid_argument("theoretical_rate: kappa must be 1 or 2");
  if (in.prior == RatePriorKind::FiniteMixture && !(in.tau1 > 0.0))
    throw std::invalid_argument("theoretical_rate: tau1 must be positive");

  RateFormula f;
  f.inputs = in;
  const double d = in.dimension;
  std::vector<double> alpha(static_cast<std::size_t>(in.dimension), 1.0);
  if (in.anisotropy) {
    if (in.anisotropy->size() != alpha.size())
      throw std::invalid_argument("theoretical_rate: anisotropy needs one entry per axis");
    double sum = 0.0;
    for (double a : *in.anisotropy) {
      if (!(a > 0.0)) throw std::invalid_argument("theoretical_rate: anisotropy entries must be positive");
      sum += a;
    }
    if (std::abs(sum - d) > 1e-9) throw std::invalid_argument("theoretical_rate: anisotropy must sum to the dimension");
    alpha = *in.anisotropy;
  }
  f.alpha_max = *std::max_element(alpha.begin(), alpha.end());
  f.effective_dimension = std::max(d, in.kappa * f.alpha_max);
  const double ds = f.effective_dimension;
  f.exponent = in.beta / (2.0 * in.beta + ds);
  f.log_power = (ds * (1.0 + 1.0 / in.tau + 1.0 / in.beta) + 1.0) / (2.0 + ds / in.beta);
  if (in.prior == RatePriorKind::FiniteMixture) {
    f.finite_mixture_offset = std::max(0.0, (1.0 - in.tau1) / 2.0);
    f.log_power += f.finite_mixture_offset;
  }
  for (double a : alpha) f.axial_smoothness.push_back(in.beta / a);
  return f;
}

int sieve_truncation(const RateFormula& formula, double n, const ChainSettings& chain) {
  const double eps = formula.epsilon_n(n);
  const double raw = std::floor(n * eps * eps / std::log(n));
  const double h = std::clamp(raw, static_cast<double>(chain.truncation_floor), static_cast<double>(chain.truncation_cap));
  return static_cast<int>(h);
}

// ---------------------------------------------------------------------------
// Experiment configuration

void RateExperimentConfig::validate() const {
  const auto f0 = density_from_json(density);
  prior.validate();
  if (prior.dimension() != f0->dimension())
    throw std::invalid_argument("experiment config: prior and density dimensions differ");
  if (ladder.size() < 4) throw std::invalid_argument("experiment config: ladder needs at least four sample sizes");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i] < 10) throw std::invalid_argument("experiment config: sample sizes must be at least 10");
    if (i > 0 && ladder[i] <= ladder[i - 1])
      throw std::invalid_argument("experiment config: ladder must be strictly increasing");
  }
  if (replications < 3) throw std::invalid_argument("experiment config: at least three replications");
  if (chain.iterations <= chain.burn_in || chain.burn_in < 0 || chain.thin < 1)
    throw std::invalid_argument("experiment config: iterations must exceed burn_in and thin must be positive");
  if (chain.truncation && *chain.truncation < 5) throw std::invalid_argument("experiment config: truncation below 5");
  if (chain.truncation_floor < 5 || chain.truncation_cap < chain.truncation_floor)
    throw std::invalid_argument("experiment config: truncation floor/cap out of order");
  if (bootstrap_resamples < 100) throw std::invalid_argument("experiment config: at least 100 bootstrap resamples");
  RateInputs r = rate;
  r.dimension = prior.dimension();
  r.kappa = prior.kappa();
  (void)theoretical_rate(r);
}

Json RateExperimentConfig::to_json() const {
  Json ch{{"iterations", chain.iterations},
          {"burn_in", chain.burn_in},
          {"thin", chain.thin},
          {"truncation_floor", chain.truncation_floor},
          {"truncation_cap", chain.truncation_cap}};
  ch["truncation"] = chain.truncation ? Json(*chain.truncation) : Json("sieve");
  Json r{{"beta", rate.beta}, {"tau", rate.tau}, {"prior", prior_kind_name(rate.prior)}};
  if (rate.anisotropy) r["anisotropy"] = *rate.anisotropy;
  if (rate.prior == RatePriorKind::FiniteMixture) r["tau1"] = rate.tau1;
  return Json{{"density", density_from_json(density)->describe()},
              {"prior", prior.to_json()},
              {"ladder", ladder},
              {"replications", replications},
              {"chain", ch},
              {"loss", to_string(loss)},
              {"seed", seed},
              {"rate", r},
              {"bootstrap_resamples", bootstrap_resamples}};
}

namespace {

PriorSpec prior_from_config(const Json& j, int dimension) {
  if (j.contains("base_mean")) return PriorSpec::from_json(j);
  const std::string kind = j.value("kind", std::string("inverse_wishart"));
  const double base_sd = j.value("base_sd", 2.0);
  const double mass = j.value("total_mass", 1.0);
  if (kind == to_string(CovariancePriorKind::InverseWishart)) {
    Eigen::MatrixXd scale = Eigen::MatrixXd::Identity(dimension, dimension);
    if (j.contains("scale")) {
      const Json& s = j.at("scale");
      if (s.is_number()) {
        scale *= s.get<double>();
      } else {
        for (int r = 0; r < dimension; ++r)
          for (int c = 0; c < dimension; ++c) scale(r, c) = s.at(r).at(c).get<double>();
      }
    }
    return PriorSpec::inverse_wishart(dimension, j.value("dof", dimension + 2.0), scale, base_sd, mass);
  }
  for (auto k : {CovariancePriorKind::InverseGammaDiagonal, CovariancePriorKind::SquaredInverseGammaDiagonal}) {
    if (kind == to_string(k)) return PriorSpec::diagonal(dimension, k, j.value("shape", 2.0), j.value("rate", 1.0), base_sd, mass);
  }
  throw std::invalid_argument("experiment config: unknown prior kind " + kind);
}

}  // namespace

RateExperimentConfig RateExperimentConfig::from_json(const Json& j) {
  RateExperimentConfig c;
  c.density = j.at("density");
  const int d = density_from_json(c.density)->dimension();
  c.prior = prior_from_config(j.value("prior", Json::object()), d);
  c.ladder = j.at("ladder").get<std::vector<int>>();
  c.replications = j.value("replications", 3);
  if (j.contains("chain")) {
    const Json& ch = j.at("chain");
    c.chain.iterations = ch.value("iterations", c.chain.iterations);
    c.chain.burn_in = ch.value("burn_in", c.chain.burn_in);
    c.chain.thin = ch.value("thin", c.chain.thin);
    c.chain.truncation_floor = ch.value("truncation_floor", c.chain.truncation_floor);
    c.chain.truncation_cap = ch.value("truncation_cap", c.chain.truncation_cap);
    if (ch.contains("truncation")) {
      const Json& t = ch.at("truncation");
      if (t.is_number_integer()) {
        c.chain.truncation = t.get<int>();
      } else if (!(t.is_string() && t.get<std::string>() == "sieve")) {
        throw std::invalid_argument("experiment config: chain.truncation must be an integer or \"sieve\"");
      }
    }
  }
  c.loss = loss_metric_from_string(j.value("loss", std::string("l1")));
  c.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("rate")) {
    const Json& r = j.at("rate");
    c.rate.beta = r.value("beta", c.rate.beta);
    c.rate.tau = r.value("tau", c.rate.tau);
    if (r.contains("anisotropy")) c.rate.anisotropy = r.at("anisotropy").get<std::vector<double>>();
    c.rate.prior = prior_kind_from_string(r.value("prior", std::string("dirichlet_process")));
    c.rate.tau1 = r.value("tau1", c.rate.tau1);
  }
  c.rate.dimension = d;
  c.rate.kappa = c.prior.kappa();
  c.bootstrap_resamples = j.value("bootstrap_resamples", c.bootstrap_resamples);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Experiment

namespace {

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  return fit_line(x, y).slope;
}

}  // namespace

SlopeFit fit_rate_slope(const std::vector<ExperimentCell>& cells, int resamples, std::uint64_t seed) {
  std::vector<int> levels;
  std::vector<std::vector<double>> losses;  // per level
  for (const auto& c : cells) {
    if (!c.ok || !(c.median_loss > 0.0)) continue;
    auto it = std::find(levels.begin(), levels.end(), c.n);
    if (it == levels.end()) {
      levels.push_back(c.n);
      losses.emplace_back();
      it = levels.end() - 1;
    }
    losses[static_cast<std::size_t>(it - levels.begin())].push_back(std::log(c.median_loss));
  }
  if (levels.size() < 2) throw std::invalid_argument("fit_rate_slope: need at least two sample sizes with usable cells");

  std::vector<double> x, y;
  for (std::size_t l = 0; l < levels.size(); ++l)
    for (double v : losses[l]) {
      x.push_back(std::log(static_cast<double>(levels[l])));
      y.push_back(v);
    }
  const LinearFit full = fit_line(x, y);
  SlopeFit fit;
  fit.slope = full.slope;
  fit.intercept = full.intercept;
  fit.points = x.size();

  Rng rng = make_stream(seed, 0x51ee7ULL);
  std::vector<double> slopes;
  slopes.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    std::vector<double> bx, by;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const auto& group = losses[l];
      std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
      for (std::size_t k = 0; k < group.size(); ++k) {
        bx.push_back(std::log(static_cast<double>(levels[l])));
        by.push_back(group[pick(rng)]);
      }
    }
    slopes.push_back(ols_slope(bx, by));
  }
  fit.ci_lower = quantile(slopes, 0.025);
  fit.ci_upper = quantile(slopes, 0.975);
  return fit;
}

RateExperimentResult run_rate_experiment(const RateExperimentConfig& config, int workers) {
  config.validate();
  const std::shared_ptr<const TestDensity> f0 = density_from_json(config.density);
  RateInputs inputs = config.rate;
  inputs.dimension = f0->dimension();
  inputs.kappa = config.prior.kappa();

  RateExperimentResult result;
  result.config = config.to_json();
  result.fingerprint = config_fingerprint(result.config);
  result.formula = theoretical_rate(inputs);
  result.reference_slope = -result.formula.exponent;

  const std::size_t reps = static_cast<std::size_t>(config.replications);
  result.cells.resize(config.ladder.size() * reps);
  parallel_for(result.cells.size(), workers, [&](std::size_t index) {
    ExperimentCell& cell = result.cells[index];
    cell.n = config.ladder[index / reps];
    cell.replication = static_cast<int>(index % reps);
    cell.truncation = config.chain.truncation ? *config.chain.truncation
                                              : sieve_truncation(result.formula, cell.n, config.chain);
    const std::uint64_t cell_seed = derive_seed(config.seed, index);
    try {
      Rng data_rng = make_stream(cell_seed, 0);
      Eigen::MatrixXd data(cell.n, f0->dimension());
      for (int i = 0; i < cell.n; ++i) data.row(i) = f0->sample(data_rng).transpose();

      GibbsOptions opt;
      opt.truncation = cell.truncation;
      opt.iterations = config.chain.iterations;
      opt.burn_in = config.chain.burn_in;
      opt.thin = config.chain.thin;
      opt.truth = f0;
      Rng chain_rng = make_stream(cell_seed, 1);
      const PosteriorSummary s = run_gibbs(data, config.prior, opt, chain_rng);

      cell.median_loss = posterior_loss_quantile(s, *f0, config.loss, 0.5);
      const auto truth = f0->values_on_grid(s.grid);
      cell.mean_density_loss = config.loss == LossMetric::L1 ? l1_on_grid(s.grid, truth, s.mean_density)
                                                             : hellinger_on_grid(s.grid, truth, s.mean_density);
      cell.covariance_retries = s.covariance_retries;
      cell.ok = std::isfinite(cell.median_loss) && cell.median_loss > 0.0;
      if (!cell.ok) cell.error = "non-positive or non-finite median loss";
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  });

  for (const auto& c : result.cells) result.failed_cells += c.ok ? 0 : 1;
  try {
    result.fit = fit_rate_slope(result.cells, config.bootstrap_resamples, derive_seed(config.seed, 0xb007ULL));
  } catch (const std::invalid_argument&) {
    result.fit = SlopeFit{std::nan(""), std::nan(""), std::nan(""), std::nan(""), 0};
  }
  return result;
}

Json RateExperimentResult::to_json() const {
  Json cj = Json::array();
  for (const auto& c : cells) {
    Json e{{"n", c.n},
           {"replication", c.replication},
           {"truncation", c.truncation},
           {"ok", c.ok},
           {"median_loss", c.median_loss},
           {"mean_density_loss", c.mean_density_loss},
           {"covariance_retries", c.covariance_retries}};
    if (!c.ok) e["error"] = c.error;
    cj.push_back(std::move(e));
  }
  return Json{{"config", config},
              {"fingerprint", fingerprint},
              {"formula", formula.to_json()},
              {"cells", cj},
              {"fit",
               {{"slope", fit.slope},
                {"intercept", fit.intercept},
                {"ci_lower", fit.ci_lower},
                {"ci_upper", fit.ci_upper},
                {"points", fit.points}}},
              {"reference_slope", reference_slope},
              {"failed_cells", failed_cells}};
}

std::string RateExperimentResult::to_csv() const {
  CsvTable t({"n", "replication", "truncation", "ok", "median_loss", "mean_density_loss", "covariance_retries"});
  for (const auto& c : cells)
    t.add_row({static_cast<double>(c.n), static_cast<double>(c.replication), static_cast<double>(c.truncation),
               c.ok ? 1.0 : 0.0, c.median_loss, c.mean_density_loss, static_cast<double>(c.covariance_retries)});
  const Json header{{"fingerprint", fingerprint},
                    {"slope", fit.slope},
                    {"ci_lower", fit.ci_lower},
                    {"ci_upper", fit.ci_upper},
                    {"reference_slope", reference_slope},
                    {"failed_cells", failed_cells}};
  return t.to_string(&header);
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  throw std::invalid_argument("unknown report format: " + s + " (expected json or csv)");
}

std::string render_report(const RateExperimentResult& result, ReportFormat format) {
  return format == ReportFormat::Json ? canonical_json(result.to_json()) + "\n" : result.to_csv();
}

void emit_report(const RateExperimentResult& result, ReportFormat format, const std::filesystem::path& path) {
  write_text_file(path, render_report(result, format));
}

// ---------------------------------------------------------------------------
// Verify suites

namespace {

struct SplineCase {
  int order;
  int dimension;
  std::vector<double> hellinger_sigmas;
};

// Hellinger ladders start where the smallness precondition holds for each density.
const std::vector<SplineCase>& spline_cases() {
  static const std::vector<SplineCase> cases = {
      {2, 1, {0.4, 0.2, 0.1, 0.05}},
      {3, 1, {0.35, 0.2, 0.1, 0.05}},
      {4, 1, {0.35, 0.2, 0.1, 0.05}},
      {2, 2, {0.4, 0.2, 0.1, 0.05}},
      {3, 2, {0.13, 0.08, 0.04, 0.02, 0.013}},
  };
  return cases;
}

// The 2-d constructions need a fine grid; at 512 points per axis the
// truncated density's error floor distorts the order-3 slope.
GridSpec scan_grid(const TestDensity& f) { return working_grid(f, f.dimension() == 1 ? 1 << 14 : 2048); }

SuiteResult suite_kernel_order(int workers) {
  SuiteResult r{"kernel_order", true, Json::array()};
  const std::vector<double> sigmas{0.4, 0.2, 0.1, 0.05};
  for (const auto& c : spline_cases()) {
    const std::shared_ptr<const TestDensity> f = make_spline_density(c.order, c.dimension);
    const auto scan = approximation_error_scan(f, f->smoothness(), sigmas, ErrorNorm::SupWeighted, scan_grid(*f), workers);
    const bool ok = scan.slope >= c.order - 0.2;
    r.pass = r.pass && ok;
    r.details.push_back({{"order", c.order}, {"dimension", c.dimension}, {"slope", scan.slope},
                         {"required", c.order - 0.2}, {"pass", ok}});
  }
  return r;
}

SuiteResult suite_hellinger_order(int workers) {
  SuiteResult r{"hellinger_order", true, Json::array()};
  for (const auto& c : spline_cases()) {
    const std::shared_ptr<const TestDensity> f = make_spline_density(c.order, c.dimension);
    const double beta = f->smoothness();
    const auto scan = hellinger_order_scan(f, beta, 0.1, c.hellinger_sigmas, scan_grid(*f), workers);
    // Bounded: no ladder step exceeds ten times the first ratio (or 10 when that is below 1).
    const double cap = 10.0 * std::max(scan.rows.front().outside_ratio, 1.0);
    double worst = 0.0;
    for (const auto& row : scan.rows) worst = std::max(worst, row.outside_ratio);
    const bool ok = scan.slope_h >= beta - 0.2 && scan.slope_htilde >= beta - 0.2 && worst <= cap;
    r.pass = r.pass && ok;
    r.details.push_back({{"order", c.order}, {"dimension", c.dimension}, {"slope_h", scan.slope_h},
                         {"slope_htilde", scan.slope_htilde}, {"max_outside_ratio", worst},
                         {"outside_ratio_cap", cap}, {"pass", ok}});
  }
  return r;
}

SuiteResult suite_divergences(std::uint64_t seed) {
  SuiteResult r{"divergences", true, Json::object()};
  Rng rng = make_stream(seed, 0xd1ULL);

  auto random_gaussian = [&](int d) {
    Eigen::VectorXd mean(d);
    for (int i = 0; i < d; ++i) mean(i) = -1.0 + 2.0 * draw_uniform(rng);
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = 0.4 * draw_normal(rng);
    Eigen::MatrixXd cov = a * a.transpose();
    for (int i = 0; i < d; ++i) cov(i, i) += 0.25 + draw_uniform(rng);
    return std::make_pair(mean, CovarianceSpec::from_matrix(cov));
  };
  auto density = [](const std::pair<Eigen::VectorXd, CovarianceSpec>& g) {
    return make_gaussian_mixture(MixingMeasure::dirac(g.first), g.second);
  };

  const GridSpec g1 = GridSpec::cube(1, 14.0, 8192);
  const GridSpec g2 = GridSpec::cube(2, 12.0, 512);
  double worst_oracle = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int d = t % 2 == 0 ? 1 : 2;
    const auto a = random_gaussian(d);
    const auto b = random_gaussian(d);
    const auto pa = density(a);
    const auto pb = density(b);
    const double quad = hellinger(as_point_function(*pa), as_point_function(*pb), d == 1 ? g1 : g2);
    const double exact = gaussian_hellinger_oracle(a.second, b.second, a.first, b.first);
    worst_oracle = std::max(worst_oracle, std::abs(quad - exact));
  }
  const bool oracle_ok = worst_oracle <= 1e-6;

  std::size_t kl_violations = 0;
  for (int t = 0; t < 50; ++t) {
    const auto pa = density(random_gaussian(1));
    const auto pb = density(random_gaussian(1));
    const double lambda = (0.05 + 0.9 * draw_uniform(rng)) * kl_hellinger_lambda_limit();
    const auto rep = check_kl_by_hell(as_point_function(*pa), as_point_function(*pb), lambda, g1);
    if (!rep.first.holds || !rep.second.holds) ++kl_violations;
  }

  std::size_t mixing_violations = 0;
  for (int t = 0; t < 50; ++t) {
    std::vector<std::shared_ptr<GaussianMixtureDensity>> keep;
    std::vector<std::pair<PointFunction, PointFunction>> pairs;
    std::vector<double> weights;
    double total = 0.0;
    for (int k = 0; k < 3; ++k) {
      keep.push_back(density(random_gaussian(1)));
      keep.push_back(density(random_gaussian(1)));
      pairs.emplace_back(as_point_function(*keep[keep.size() - 2]), as_point_function(*keep.back()));
      weights.push_back(draw_gamma(rng, 1.0, 1.0));
      total += weights.back();
    }
    for (double& w : weights) w /= total;
    const double sd = 0.1 + draw_uniform(rng);
    const auto rep = check_hellinger_mixing(pairs, weights, g1, std::vector<double>{sd});
    if (!rep.mixing.holds || !rep.convolution.holds) ++mixing_violations;
  }

  r.pass = oracle_ok && kl_violations == 0 && mixing_violations == 0;
  r.details = {{"oracle_pairs", 100}, {"max_oracle_error", worst_oracle}, {"oracle_pass", oracle_ok},
               {"kl_pairs", 50}, {"kl_violations", kl_violations},
               {"mixing_trials", 50}, {"mixing_violations", mixing_violations}};
  return r;
}

SuiteResult suite_discretize() {
  SuiteResult r{"discretize", true, Json::object()};
  DiscretizationOptions two_point;
  two_point.points_per_cell = 2;
  two_point.cells_per_axis = 1;
  const auto gauss = moment_match_discretize(ProductMeasure::uniform_box(1, 1.0), 0.5, 0.2, two_point);
  std::vector<std::pair<double, double>> nodes;
  for (std::size_t i = 0; i < gauss.measure.size(); ++i) nodes.emplace_back(gauss.measure.atoms[i](0), gauss.measure.weights[i]);
  std::sort(nodes.begin(), nodes.end());
  const double node = 1.0 / std::sqrt(3.0);
  double gauss_error = nodes.size() == 2 ? 0.0 : 1.0;
  if (nodes.size() == 2) {
    gauss_error = std::max({std::abs(nodes[0].first + node), std::abs(nodes[1].first - node),
                            std::abs(nodes[0].second - 0.5), std::abs(nodes[1].second - 0.5)});
  }
  const bool gauss_ok = gauss_error <= 1e-10;

  const std::vector<double> eps{0.2, 0.1, 0.05};
  std::vector<double> l1;
  for (double e : eps) l1.push_back(moment_match_discretize(ProductMeasure::uniform_box(1, 1.0), 0.25, e).l1_error);
  const double slope = fit_loglog(eps, l1).slope;
  const bool linear_ok = slope >= 0.8 && slope <= 1.2;

  r.pass = gauss_ok && linear_ok;
  r.details = {{"gauss_atoms", nodes.size()}, {"gauss_error", gauss_error}, {"gauss_pass", gauss_ok},
               {"epsilons", eps}, {"l1_errors", l1}, {"l1_slope", slope}, {"linear_pass", linear_ok}};
  return r;
}

SuiteResult suite_priors(std::uint64_t seed, int workers) {
  SuiteResult r{"priors", true, Json::object()};
  struct Triple {
    int h;
    double mass;
    double eps;
  };
  const std::vector<Triple> triples{{5, 1.0, 0.1}, {10, 1.0, 0.01}, {3, 2.0, 0.2}, {20, 1.0, 0.01}, {25, 1.0, 0.001}};
  Json sticks = Json::array();
  bool sticks_ok = true;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto& t = triples[i];
    const auto exact = stick_tail_probability(t.h, t.mass, t.eps);
    const auto mc = stick_tail_monte_carlo(t.h, t.mass, t.eps, 100000, derive_seed(seed, 100 + i));
    const double se = std::sqrt(exact.exact * (1.0 - exact.exact) / static_cast<double>(mc.draws));
    const bool mc_ok = std::abs(mc.estimate - exact.exact) <= 3.0 * se;
    const bool bound_ok = !exact.bound_applies || exact.exact <= exact.stirling_bound;
    sticks_ok = sticks_ok && mc_ok && bound_ok;
    sticks.push_back({{"truncation", t.h}, {"total_mass", t.mass}, {"epsilon", t.eps}, {"exact", exact.exact},
                      {"monte_carlo", mc.estimate}, {"standard_error", se}, {"stirling_bound", exact.stirling_bound},
                      {"bound_applies", exact.bound_applies}, {"pass", mc_ok && bound_ok}});
  }

  Json traces = Json::array();
  bool traces_ok = true;
  for (int d = 1; d <= 3; ++d)
    for (int nu = 3; nu <= 6; ++nu) {
      const auto rep = check_wishart_facts(nu, Eigen::MatrixXd::Identity(d, d), 10000,
                                           derive_seed(seed, 200 + static_cast<std::uint64_t>(10 * d + nu)));
      traces_ok = traces_ok && rep.ks_pass;
      traces.push_back({{"dof", nu}, {"dimension", d}, {"ks_p_value", rep.ks_p_value}, {"pass", rep.ks_pass}});
    }

  const std::size_t samples = 10000000;
  const auto iw = verify_prior_tails(PriorSpec::inverse_wishart(1, 3.0, Eigen::MatrixXd::Identity(1, 1)), samples,
                                     derive_seed(seed, 300), 0.5, workers);
  const auto sq = verify_prior_tails(
      PriorSpec::diagonal(1, CovariancePriorKind::SquaredInverseGammaDiagonal, 2.0, 1.0), samples,
      derive_seed(seed, 301), 0.5, workers);
  const auto& a = iw.band_mass.fit;
  const auto& b = sq.band_mass.fit;
  const bool kappa_ok = !a.degenerate && !b.degenerate && (a.lower > b.upper || b.lower > a.upper) && a.value > b.value;

  r.pass = sticks_ok && traces_ok && kappa_ok;
  r.details = {{"stick_tails", sticks},
               {"wishart_trace_ks", traces},
               {"kappa",
                {{"inverse_wishart", {{"value", a.value}, {"lower", a.lower}, {"upper", a.upper}}},
                 {"squared_inverse_gamma", {{"value", b.value}, {"lower", b.lower}, {"upper", b.upper}}},
                 {"pass", kappa_ok}}}};
  return r;
}

SuiteResult suite_sieve(std::uint64_t seed, int workers) {
  SuiteResult r{"sieve", true, Json::object()};
  CoverageOptions cov;
  cov.workers = workers;
  SieveSpec s1{1, 0.1, 1.0, 0.5, 5, 10};
  SieveSpec s2{2, 0.2, 1.0, 0.5, 5, 10};
  const auto c1 = verify_net_covers(s1, 200, derive_seed(seed, 1), cov);
  const auto c2 = verify_net_covers(s2, 200, derive_seed(seed, 2), cov);
  const bool cover_ok = c1.pass && c2.pass && c1.covered == 200 && c2.covered == 200;

  const PriorSpec prior = PriorSpec::inverse_wishart(1, 3.0, Eigen::MatrixXd::Identity(1, 1));
  Json lattice = Json::array();
  bool complement_ok = true;
  bool entropy_ok = true;
  const auto specs = standard_sieve_lattice();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto cm = complement_mass(specs[i], prior, 100000, derive_seed(seed, 10 + i), workers);
    const bool cm_ok = cm.estimate <= cm.bound + 3.0 * cm.standard_error;
    const double ratio = build_net(specs[i]).cardinality().ratio;
    const bool ent_ok = ratio <= kNetEntropyConstant;
    complement_ok = complement_ok && cm_ok;
    entropy_ok = entropy_ok && ent_ok;
    lattice.push_back({{"spec", specs[i].to_json()}, {"estimate", cm.estimate}, {"standard_error", cm.standard_error},
                       {"bound", cm.bound}, {"complement_pass", cm_ok}, {"entropy_ratio", ratio},
                       {"entropy_pass", ent_ok}});
  }
  r.pass = cover_ok && complement_ok && entropy_ok;
  r.details = {{"coverage", {c1.to_json(), c2.to_json()}},
               {"lattice", lattice},
               {"entropy_constant", kNetEntropyConstant}};
  return r;
}

}  // namespace

std::vector<std::string> verify_suite_names() {
  return {"kernel_order", "hellinger_order", "sieve", "priors", "discretize", "divergences"};
}

SuiteResult run_verify_suite(const std::string& name, std::uint64_t seed, int workers) {
  if (name == "kernel_order") return suite_kernel_order(workers);
  if (name == "hellinger_order") return suite_hellinger_order(workers);
  if (name == "sieve") return suite_sieve(seed, workers);
  if (name == "priors") return suite_priors(seed, workers);
  if (name == "discretize") return suite_discretize();
  if (name == "divergences") return suite_divergences(seed);
  std::ostringstream msg;
  msg << "unknown suite '" << name << "'; expected one of:";
  for (const auto& s : verify_suite_names()) msg << ' ' << s;
  throw std::invalid_argument(msg.str());
}

}  // namespace dpmlab
