#include <gtest/gtest.h>

#include <cmath>

#include "dpmlab/sieve_entropy.hpp"

using namespace dpmlab;

namespace {

SieveSpec small_spec() { return SieveSpec{1, 0.3, 1.0, 0.5, 3, 4}; }

}  // namespace

TEST(SieveSpec, BracketFallsAsEpsilonGrows) {
  double prev = INFINITY;
  for (double eps : {0.05, 0.1, 0.2, 0.4}) {
    SieveSpec s{1, eps, 2.0, 0.3, 6, 20};
    const double b = s.entropy_bracket();
    EXPECT_LT(b, prev);
    prev = b;
  }
  EXPECT_THROW((SieveSpec{1, 1.5, 1.0, 0.5, 2, 4}.validate()), std::invalid_argument);
}

TEST(SieveNet, EnumerationCountMatchesCardinality) {
  const auto net = build_net(small_spec());
  const std::size_t n = net.enumerate([](const NetElement&) {}, 10000000);
  EXPECT_NEAR(std::log(static_cast<double>(n)), net.cardinality().log_total, 1e-9);
}

TEST(SieveNet, EncodeDecodeRoundTrip) {
  for (const SieveSpec& spec : {small_spec(), SieveSpec{2, 0.4, 1.0, 0.5, 2, 3}}) {
    const auto net = build_net(spec);
    std::size_t checked = 0;
    net.enumerate(
        [&](const NetElement& e) {
          const auto dec = net.decode(e);
          EXPECT_EQ(net.encode(dec.mixing, dec.covariance), e);
          ++checked;
        },
        3000);
    EXPECT_GT(checked, 0u);
  }
}

TEST(SieveNet, DecodedElementsAreMembers) {
  const auto net = build_net(small_spec());
  net.enumerate(
      [&](const NetElement& e) {
        const auto dec = net.decode(e);
        EXPECT_TRUE(sieve_membership(dec.mixing, dec.covariance, net.spec()).member);
      },
      500);
}

TEST(SieveMembership, ReportsViolations) {
  const SieveSpec spec = small_spec();
  MixingMeasure far = MixingMeasure::dirac(Eigen::VectorXd::Constant(1, 5.0));
  const auto r = sieve_membership(far, CovarianceSpec::isotropic(1, 0.3), spec);
  EXPECT_FALSE(r.member);
  EXPECT_FALSE(r.violations.empty());
}

TEST(Coverage, SmallRunCoversEveryDraw) {
  const auto r = verify_net_covers(SieveSpec{1, 0.2, 1.0, 0.5, 4, 8}, 40, 17);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.covered, r.trials);
  EXPECT_LE(r.max_distance, r.threshold);
}

TEST(Complement, MonteCarloBelowBound) {
  const auto prior = PriorSpec::inverse_wishart(1, 3.0, Eigen::MatrixXd::Identity(1, 1));
  const auto spec = standard_sieve_lattice().front();
  const auto c = complement_mass(spec, prior, 20000, 3);
  EXPECT_LE(c.estimate, c.bound + 3.0 * c.standard_error);
  EXPECT_TRUE(c.exact_eigen_terms);
}

TEST(Lattice, EntropyRatioWithinCalibratedConstant) {
  const auto lattice = standard_sieve_lattice();
  ASSERT_EQ(lattice.size(), 9u);
  for (const auto& s : lattice) EXPECT_LE(build_net(s).cardinality().ratio, kNetEntropyConstant);
}
