#include <gtest/gtest.h>

#include <cmath>

#include "dpmlab/prior_model.hpp"
#include "dpmlab/stats.hpp"
#include "oracles.hpp"

using namespace dpmlab;

TEST(StickTail, ExactValueMatchesGammaSeries) {
  for (int h : {3, 5, 10, 20})
    for (double mass : {0.5, 1.0, 2.0})
      for (double eps : {0.2, 0.05, 0.001}) {
        const auto p = stick_tail_probability(h, mass, eps);
        EXPECT_NEAR(p.exact, oracle::gamma_cdf_series(h, mass, std::log(1.0 / eps)), 1e-12);
        if (p.bound_applies) EXPECT_LE(p.exact, p.stirling_bound);
      }
}

TEST(StickTail, ProbabilityFallsWithTruncation) {
  double prev = 1.0;
  for (int h = 1; h <= 30; ++h) {
    const double p = stick_tail_probability(h, 1.0, 0.01).exact;
    EXPECT_LE(p, prev);
    prev = p;
  }
}

TEST(Sticks, WeightsAndRemainderSumToOne) {
  Rng rng = make_stream(9, 0);
  for (int t = 0; t < 50; ++t) {
    const auto s = draw_sticks(15, 1.5, rng);
    double total = s.remainder;
    for (double w : s.weights) {
      EXPECT_GE(w, 0.0);
      total += w;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  const auto spec = PriorSpec::inverse_wishart(1, 3.0, Eigen::MatrixXd::Identity(1, 1));
  for (int t = 0; t < 20; ++t) {
    const auto draw = sample_prior_density(spec, 15, rng);
    EXPECT_EQ(draw.sticks.atoms.size(), 15u);
    EXPECT_NO_THROW(draw.sticks.measure().validate());
  }
}

TEST(Wishart, TraceIsChiSquared) {
  // tr(Psi Sigma^{-1}) ~ chi^2_{nu d}; compared with the Boost CDF.
  Eigen::MatrixXd psi(2, 2);
  psi << 2.0, 0.5, 0.5, 1.0;
  const auto spec = PriorSpec::inverse_wishart(2, 4.0, psi);
  Rng rng = make_stream(21, 0);
  std::vector<double> tr;
  for (int i = 0; i < 4000; ++i) tr.push_back((psi * draw_precision(spec, rng)).trace());
  const auto ks = ks_test(tr, [](double x) { return oracle::chi_squared_cdf(8.0, x); });
  EXPECT_GT(ks.p_value, 0.001);
}

TEST(Wishart, FactsReportMatchesTheory) {
  const auto r = check_wishart_facts(5.0, Eigen::MatrixXd::Identity(2, 2), 20000, 4);
  EXPECT_TRUE(r.ks_pass);
  EXPECT_NEAR(r.trace_mean, r.trace_expected, 4.0 * r.trace_mean_stderr);
  EXPECT_DOUBLE_EQ(r.small_eigen_expected, 2.0);
  ASSERT_FALSE(r.inverse_gamma_ks_p.has_value());
}

TEST(Covariance, DrawsArePositiveDefinite) {
  Rng rng = make_stream(2, 0);
  for (auto kind : {CovariancePriorKind::InverseGammaDiagonal, CovariancePriorKind::SquaredInverseGammaDiagonal}) {
    const auto spec = PriorSpec::diagonal(3, kind, 2.0, 1.0);
    for (int i = 0; i < 100; ++i) EXPECT_GT(draw_covariance(spec, rng).covariance.eigenvalues()(0), 0.0);
  }
}

TEST(PriorSpec, JsonRoundTripAndKappa) {
  const auto a = PriorSpec::inverse_wishart(2, 4.0, Eigen::MatrixXd::Identity(2, 2), 1.5, 2.0);
  const auto b = PriorSpec::from_json(a.to_json());
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(a.kappa(), 2);
  EXPECT_EQ(PriorSpec::diagonal(1, CovariancePriorKind::SquaredInverseGammaDiagonal, 2, 1).kappa(), 1);
  EXPECT_THROW(PriorSpec::inverse_wishart(2, 0.5, Eigen::MatrixXd::Identity(2, 2)), std::invalid_argument);
}

TEST(TailExponent, RecoversPlantedExponent) {
  // m(s) = s^{0.5} exp(-2 s^{1.5}) with binomial-sized noise-free values.
  std::vector<double> s, m;
  for (double x = 0.5; x <= 2.0; x += 0.15) {
    s.push_back(x);
    m.push_back(std::sqrt(x) * std::exp(-2.0 * std::pow(x, 1.5)));
  }
  const auto fit = fit_tail_exponent(s, m, 100000000);
  EXPECT_NEAR(fit.value, 1.5, 0.01);
  // Noise-free input collapses the interval onto the 0.005 search grid.
  EXPECT_LE(fit.lower, 1.5 + 1e-9);
  EXPECT_GE(fit.upper, 1.5 - 1e-9);
}

TEST(KlBall, MassIsPositiveAndGrowsWithRadius) {
  const auto f0 = make_standard_normal(1);
  const auto prior = PriorSpec::inverse_wishart(1, 3.0, Eigen::MatrixXd::Identity(1, 1));
  const GridSpec g = GridSpec::cube(1, 10.0, 512);
  const auto small = estimate_kl_ball_mass(prior, *f0, 0.3, 1.0, 400, 10, g, 8);
  const auto large = estimate_kl_ball_mass(prior, *f0, 0.5, 1.0, 400, 10, g, 8);
  EXPECT_GT(large.hits, 0u);
  EXPECT_GE(large.estimate, small.estimate);
}
