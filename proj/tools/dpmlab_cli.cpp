// dpmlab: rate formulas, contraction-rate experiments and property suites.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpmlab/parallel.hpp"
#include "dpmlab/rate_lab.hpp"
#include "dpmlab/report_io.hpp"

namespace {

struct RatesArgs {
  double beta = 2.0;
  int dim = 1;
  int kappa = 2;
  double tau = 2.0;
  std::vector<double> alpha;
  bool finite_mixture = false;
  double tau1 = 1.0;
};

struct ExperimentArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::string format = "json";
};

struct VerifyArgs {
  std::string suite;
  std::uint64_t seed = 1;
  int workers = 0;
};

int run_rates(const RatesArgs& a) {
  dpmlab::RateInputs in;
  in.beta = a.beta;
  in.dimension = a.dim;
  in.kappa = a.kappa;
  in.tau = a.tau;
  if (!a.alpha.empty()) in.anisotropy = a.alpha;
  if (a.finite_mixture) {
    in.prior = dpmlab::RatePriorKind::FiniteMixture;
    in.tau1 = a.tau1;
  }
  const auto f = dpmlab::theoretical_rate(in);
  std::cout << dpmlab::canonical_json(f.to_json()) << '\n';
  return 0;
}

int run_experiment(const ExperimentArgs& a) {
  std::ifstream in(a.config);
  if (!in) throw std::runtime_error("cannot read config: " + a.config);
  const dpmlab::Json raw = dpmlab::Json::parse(in);
  auto config = dpmlab::RateExperimentConfig::from_json(raw);
  if (a.seed) config.seed = *a.seed;
  const int workers = a.workers > 0 ? a.workers : dpmlab::default_workers();
  const auto format = dpmlab::report_format_from_string(a.format);

  const auto result = dpmlab::run_rate_experiment(config, workers);
  if (a.out.empty() || a.out == "-") {
    std::cout << dpmlab::render_report(result, format);
  } else {
    dpmlab::emit_report(result, format, a.out);
  }
  std::cerr << "slope " << result.fit.slope << " [" << result.fit.ci_lower << ", " << result.fit.ci_upper
            << "], reference " << result.reference_slope << ", failed cells " << result.failed_cells << '\n';
  for (const auto& c : result.cells)
    if (!c.ok) std::cerr << "cell n=" << c.n << " rep=" << c.replication << ": " << c.error << '\n';
  return result.failed_cells == 0 ? 0 : 3;
}

int run_verify(const VerifyArgs& a) {
  const int workers = a.workers > 0 ? a.workers : dpmlab::default_workers();
  const auto r = dpmlab::run_verify_suite(a.suite, a.seed, workers);
  std::cout << dpmlab::canonical_json(dpmlab::Json{{"suite", r.name}, {"pass", r.pass}, {"details", r.details}})
            << '\n';
  std::cerr << r.name << ": " << (r.pass ? "PASS" : "FAIL") << '\n';
  return r.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet mixture posterior rate lab"};
  app.require_subcommand(1);

  RatesArgs rates;
  auto* rates_cmd = app.add_subcommand("rates", "Print the theoretical rate for the given inputs");
  rates_cmd->add_option("--beta", rates.beta, "Smoothness")->check(CLI::PositiveNumber);
  rates_cmd->add_option("--dim", rates.dim, "Dimension")->check(CLI::PositiveNumber);
  rates_cmd->add_option("--kappa", rates.kappa, "Covariance-prior exponent (1 or 2)")->check(CLI::IsMember({1, 2}));
  rates_cmd->add_option("--tau", rates.tau, "Tail exponent")->check(CLI::PositiveNumber);
  rates_cmd->add_option("--alpha", rates.alpha, "Anisotropy indices, summing to dim");
  auto* fm = rates_cmd->add_flag("--finite-mixture", rates.finite_mixture, "Finite-mixture prior");
  rates_cmd->add_option("--tau1", rates.tau1, "Finite-mixture prior tail exponent")->needs(fm);

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a rate experiment from a JSON config");
  exp_cmd->add_option("--config", exp.config, "Config file")->required()->check(CLI::ExistingFile);
  exp_cmd->add_option("--out", exp.out, "Report path (stdout when omitted)");
  exp_cmd->add_option("--seed", exp.seed, "Override the config seed");
  exp_cmd->add_option("--workers", exp.workers, "Worker threads (default DPMLAB_WORKERS)");
  exp_cmd->add_option("--format", exp.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Run a named property suite");
  verify_cmd->add_option("suite", verify.suite, "Suite name")
      ->required()
      ->check(CLI::IsMember(dpmlab::verify_suite_names()));
  verify_cmd->add_option("--seed", verify.seed, "Seed");
  verify_cmd->add_option("--workers", verify.workers, "Worker threads (default DPMLAB_WORKERS)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*rates_cmd) return run_rates(rates);
    if (*exp_cmd) return run_experiment(exp);
    if (*verify_cmd) return run_verify(verify);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
