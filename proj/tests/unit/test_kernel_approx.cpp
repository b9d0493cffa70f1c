#include <gtest/gtest.h>

#include <cmath>

#include "dpmlab/divergences.hpp"
#include "dpmlab/kernel_approx.hpp"

using namespace dpmlab;

TEST(Transform, NoTermsAtOrBelowOne) {
  const auto f = make_spline_density(4, 1);
  EXPECT_TRUE(apply_transform(f, 1.0, 0.1).is_identity());
  // Orders strictly below beta are kept and d_1 = 0, so beta = 2 is still the identity.
  EXPECT_TRUE(apply_transform(f, 2.0, 0.1).is_identity());
  // beta = 3 keeps only the second derivative term, weight d_2 sigma^2.
  const auto t = apply_transform(f, 3.0, 0.3);
  ASSERT_EQ(t.terms().size(), 1u);
  EXPECT_NEAR(t.terms()[0].weight, 0.5 * 0.09, 1e-15);
}

// For f = N(0, 1): K_sigma f = N(0, 1 + sigma^2) and
// K_sigma (f - sigma^2/2 f'') (beta = 3) = N(0, 1 + s^2) - s^2/2 N''(0, 1 + s^2) pointwise.
TEST(Transform, SmoothedImageClosedFormOnNormal) {
  const auto f = make_standard_normal(1);
  const double s = 0.2;
  const auto t = apply_transform(f, 3.0, s);
  ASSERT_TRUE(t.has_closed_form_smoothing());
  const double v = 1.0 + s * s;
  for (double x : {-1.0, 0.0, 0.5, 2.0}) {
    const double n = std::exp(-0.5 * x * x / v) / std::sqrt(2.0 * M_PI * v);
    const double n2 = n * (x * x / (v * v) - 1.0 / v);
    const double xs[] = {x};
    EXPECT_NEAR(t.smoothed(xs), n - 0.5 * s * s * n2, 1e-13);
  }
}

TEST(Transform, GridSmoothingMatchesClosedForm) {
  const auto f = make_standard_normal(1);
  const auto t = apply_transform(f, 4.0, 0.3);
  const GridSpec g = GridSpec::cube(1, 12.0, 4096);
  const auto closed = t.smoothed_on_grid(g);
  const auto numeric = convolve_on_grid(g, t.values_on_grid(g), 0.3);
  double worst = 0.0;
  for (std::size_t i = 0; i < closed.size(); ++i) worst = std::max(worst, std::abs(closed[i] - numeric[i]));
  EXPECT_LT(worst, 1e-9);
}

TEST(Smallness, DecreasesAsSigmaShrinks) {
  EXPECT_EQ(smallness_sum(1, 1.0, 0.1), 0.0);
  double prev = smallness_sum(1, 4.0, 0.4);
  for (double s : {0.2, 0.1, 0.05, 0.01}) {
    const double cur = smallness_sum(1, 4.0, s);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(Construction, GSigmaIsNearlyNormalized) {
  const auto f = make_spline_density(3, 1);
  const GridSpec g = working_grid(*f, 1 << 13);
  const auto c = construct_g_sigma(f, 3.0, 0.1, g);
  EXPECT_NEAR(c.normalizer(), 1.0, 1e-2);
  const auto h = construct_h_sigma(f, 3.0, 0.1, g);
  EXPECT_EQ(h.stage(), ConstructedDensity::Stage::HSigma);
}

TEST(Construction, RejectsLargeSigma) {
  const auto f = make_spline_density(4, 1);
  const GridSpec g = working_grid(*f, 1 << 12);
  EXPECT_THROW(construct_h_sigma(f, 4.0, 0.9, g), PreconditionError);
}

TEST(ErrorScan, NormalDensityShowsOrderBeta) {
  const auto f = make_standard_normal(1);
  const GridSpec g = GridSpec::cube(1, 12.0, 1 << 14);
  for (double beta : {2.0, 4.0}) {
    const auto scan = approximation_error_scan(f, beta, {0.4, 0.2, 0.1, 0.05}, ErrorNorm::SupWeighted, g);
    EXPECT_NEAR(scan.slope, beta, 0.25) << "beta=" << beta;
    EXPECT_FALSE(scan.spans_decade);  // 0.4 / 0.05 = 8
  }
  const auto wide = approximation_error_scan(f, 2.0, {0.5, 0.3, 0.1, 0.05}, ErrorNorm::SupWeighted, g);
  EXPECT_TRUE(wide.spans_decade);
}

TEST(ErrorScan, RejectsIncreasingLadder) {
  const auto f = make_standard_normal(1);
  const GridSpec g = GridSpec::cube(1, 12.0, 1024);
  EXPECT_THROW(approximation_error_scan(f, 2.0, {0.1, 0.2, 0.3}, ErrorNorm::SupWeighted, g), std::invalid_argument);
}
