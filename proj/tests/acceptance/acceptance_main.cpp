// Acceptance run: one PASS/FAIL line per criterion.
// Exit status is 1 if any criterion fails. Runtime limits are part of each criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "dpmlab/divergences.hpp"
#include "dpmlab/index_calculus.hpp"
#include "dpmlab/parallel.hpp"
#include "dpmlab/posterior_gibbs.hpp"
#include "dpmlab/rate_lab.hpp"
#include "dpmlab/stats.hpp"
#include "oracles.hpp"

using namespace dpmlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const char* title, double limit_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs <= limit_seconds;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("criterion %2d %-22s %s  %s  [%.1fs / %.0fs%s]\n", id, title, pass ? "PASS" : "FAIL", o.detail.c_str(),
              secs, limit_seconds, in_time ? "" : " over limit");
  std::fflush(stdout);
}

Outcome suite(const std::string& name, int workers) {
  const auto r = run_verify_suite(name, 20240607, workers);
  std::string d = r.details.dump();
  if (d.size() > 400 && r.pass) d = d.substr(0, 400) + "...";
  return {r.pass, d};
}

oracle::Q to_q(const Rational& r) {
  return oracle::Q(static_cast<std::int64_t>(boost::multiprecision::numerator(r)),
                   static_cast<std::int64_t>(boost::multiprecision::denominator(r)));
}

Outcome coefficients() {
  const auto table = cd_coefficients(1, 8);
  const bool exact = table.d_exact(MultiIndex{2}) == Rational(1, 2) && table.d_exact(MultiIndex{4}) == Rational(-1, 8);
  bool cancels = true;
  std::ostringstream os;
  os << "d2=" << rational_to_string(table.d_exact(MultiIndex{2})) << " d4=" << rational_to_string(table.d_exact(MultiIndex{4}))
     << " leading residual orders:";
  for (double beta : {1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.5, 6.0, 7.5, 8.0}) {
    std::vector<oracle::Q> t(9, oracle::Q(0));
    t[0] = 1;
    for (int j = 1; j <= 8; ++j)
      if (j < beta) t[j] = -to_q(table.d_exact(MultiIndex{j}));
    const int leading = oracle::leading_residual_order(t, 8);
    const int required = strict_floor(beta) + 1;
    if (leading >= 0 && leading < required) cancels = false;
    os << ' ' << beta << "->" << (leading < 0 ? std::string(">8") : std::to_string(leading));
  }
  return {exact && cancels, os.str()};
}

Outcome posterior_sanity() {
  const auto prior = PriorSpec::inverse_wishart(1, 3.0, Eigen::MatrixXd::Identity(1, 1));
  std::ostringstream os;

  GibbsOptions po;
  po.iterations = 3000;
  po.burn_in = 0;
  po.thin = 1;
  Rng prng = make_stream(11, 0);
  const auto ps = run_gibbs(Eigen::MatrixXd(0, 1), prior, po, prng);
  const boost::math::beta_distribution<> stick(1.0, prior.total_mass);
  const boost::math::chi_squared_distribution<> trace(prior.dof);
  const double p_stick = ks_test(ps.first_stick, [&](double v) { return boost::math::cdf(stick, v); }).p_value;
  const double p_trace = ks_test(ps.precision_trace, [&](double v) { return boost::math::cdf(trace, v); }).p_value;
  const bool prior_ok = p_stick >= 0.001 && p_trace >= 0.001;

  Rng drng = make_stream(200, 0);
  Eigen::MatrixXd x(200, 1);
  for (int i = 0; i < 200; ++i) x(i, 0) = draw_normal(drng);
  GibbsOptions o;
  o.truncation = 20;
  const auto f0 = make_standard_normal(1);
  Rng crng = make_stream(200, 1);
  const auto s = run_gibbs(x, prior, o, crng);
  const double l1 = l1_on_grid(s.grid, f0->values_on_grid(s.grid), s.mean_density);
  const bool fit_ok = l1 < 0.15;

  os << "prior KS p(V1)=" << p_stick << " p(trace)=" << p_trace << "; n=200 posterior-mean L1=" << l1;
  return {prior_ok && fit_ok, os.str()};
}

RateExperimentConfig rate_config() {
  return RateExperimentConfig::from_json(Json::parse(R"({
    "density": {"kind": "standard_normal", "dimension": 1},
    "prior": {"kind": "inverse_wishart", "dof": 3, "scale": 1, "base_sd": 2, "total_mass": 1},
    "ladder": [250, 500, 1000, 2000],
    "replications": 3,
    "chain": {"iterations": 1500, "burn_in": 500, "thin": 5, "truncation": 20},
    "loss": "l1",
    "seed": 20240607,
    "rate": {"beta": 2, "tau": 2},
    "bootstrap_resamples": 2000
  })"));
}

Outcome rate_trend(int workers) {
  const auto r = run_rate_experiment(rate_config(), workers);
  const auto& f = r.fit;
  const bool ok = r.failed_cells == 0 && f.slope < 0.0 && f.ci_upper < 0.0 && f.slope >= -0.55 && f.slope <= -0.15;
  std::ostringstream os;
  os << "slope=" << f.slope << " CI=[" << f.ci_lower << ", " << f.ci_upper << "] band=[-0.55, -0.15] reference="
     << r.reference_slope << " failed_cells=" << r.failed_cells;
  return {ok, os.str()};
}

Outcome determinism(int workers) {
  const auto cfg = rate_config();
  const auto a = run_rate_experiment(cfg, workers);
  const auto b = run_rate_experiment(cfg, workers);
  const auto c = run_rate_experiment(cfg, 1);
  const std::string ja = render_report(a, ReportFormat::Json), jb = render_report(b, ReportFormat::Json);
  const std::string jc = render_report(c, ReportFormat::Json);
  const bool same = ja == jb && ja == jc && render_report(a, ReportFormat::Csv) == render_report(b, ReportFormat::Csv);
  std::ostringstream os;
  os << "fingerprint=" << a.fingerprint << " json_bytes=" << ja.size() << (same ? " identical" : " differ");
  return {same, os.str()};
}

}  // namespace

int main() {
  const int workers = default_workers();
  std::printf("acceptance: %d worker(s)\n", workers);
  run(1, "coefficients", 10, coefficients);
  run(2, "kernel_order", 120, [&] { return suite("kernel_order", workers); });
  run(3, "hellinger_order", 120, [&] { return suite("hellinger_order", workers); });
  run(4, "divergences", 60, [&] { return suite("divergences", workers); });
  run(5, "discretize", 60, [&] { return suite("discretize", workers); });
  run(6, "priors", 180, [&] { return suite("priors", workers); });
  run(7, "sieve", 300, [&] { return suite("sieve", workers); });
  run(8, "posterior_sanity", 180, posterior_sanity);
  run(9, "rate_trend", 1800, [&] { return rate_trend(workers); });
  run(10, "determinism", 1800, [&] { return determinism(workers); });
  std::printf("acceptance: %d failing criterion(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
