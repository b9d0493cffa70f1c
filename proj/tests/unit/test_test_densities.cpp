#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dpmlab/grid.hpp"
#include "dpmlab/kernel_approx.hpp"
#include "dpmlab/stats.hpp"
#include "dpmlab/test_densities.hpp"

using namespace dpmlab;

TEST(StandardNormal, ValuesAndMass) {
  const auto f = make_standard_normal(1);
  const double x0[] = {0.0};
  EXPECT_NEAR(f->evaluate(x0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  const GridSpec g = GridSpec::cube(1, 10.0, 4096);
  EXPECT_NEAR(integrate(g, f->values_on_grid(g)), 1.0, 1e-10);
  EXPECT_TRUE(std::isinf(f->smoothness()));
}

TEST(StandardNormal, SecondDerivativeClosedForm) {
  const auto f = make_standard_normal(1);
  for (double x : {-1.3, 0.0, 0.7, 2.1}) {
    const double xs[] = {x};
    const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    EXPECT_NEAR(f->derivative(MultiIndex{2}, xs), (x * x - 1.0) * phi, 1e-14);
  }
}

TEST(SplineDensity, OrdersGiveSmoothnessAndMass) {
  for (int m = 1; m <= 6; ++m) {
    const auto f = make_spline_density(m, 1);
    EXPECT_DOUBLE_EQ(f->smoothness(), m);
    const GridSpec g = working_grid(*f, 1 << 14);
    EXPECT_NEAR(integrate(g, f->values_on_grid(g)), 1.0, 1e-6) << "m=" << m;
  }
  EXPECT_THROW(make_spline_density(0, 1), std::invalid_argument);
  EXPECT_THROW(make_spline_density(7, 1), std::invalid_argument);
}

TEST(SplineDensity, AnisotropicSmoothnessIsHarmonicMean) {
  const auto f = make_anisotropic_spline_density({2, 4});
  EXPECT_DOUBLE_EQ(f->smoothness(), 2.0 / (0.5 + 0.25));
  const auto alpha = f->anisotropy();
  EXPECT_NEAR(alpha[0] + alpha[1], 2.0, 1e-12);
}

TEST(SplineDensity, SamplesFollowMarginal) {
  const auto f = make_spline_density(3, 1);
  Rng rng = make_stream(7, 0);
  std::vector<double> xs;
  for (int i = 0; i < 5000; ++i) xs.push_back(f->sample(rng)(0));
  const auto ks = ks_test(xs, [&](double t) { return f->marginal_cdf(0, t); });
  EXPECT_GT(ks.p_value, 0.001);
}

TEST(DensityJson, RoundTripThroughDescribe) {
  const auto f = make_spline_density(2, 2);
  const auto g = density_from_json(f->describe());
  EXPECT_EQ(f->id(), g->id());
  const double x[] = {0.3, -0.4};
  EXPECT_DOUBLE_EQ(f->evaluate(x), g->evaluate(x));
  EXPECT_THROW(density_from_json(Json{{"kind", "cauchy"}}), std::invalid_argument);
}
