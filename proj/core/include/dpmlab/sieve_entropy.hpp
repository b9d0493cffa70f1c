#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpmlab/covariance.hpp"
#include "dpmlab/mixing_measure.hpp"
#include "dpmlab/prior_model.hpp"
#include "dpmlab/report_io.hpp"

namespace dpmlab {

// Largest log(net count) / bracket ratio tolerated over the standard lattice.
// Calibrated by the sieve calibration test.
inline constexpr double kNetEntropyConstant = 1.1;

// Q = { p_{F,Sigma}: z_h in [-a, a]^d for h <= H, sum_{h>H} pi_h < eps,
//       sigma0^2 <= eig_j(Sigma) < sigma0^2 (1 + eps^2/d)^M }.
struct SieveSpec {
  int dimension = 1;
  double epsilon = 0.1;
  double radius = 1.0;  // a
  double sigma0 = 0.5;
  int atoms = 2;        // H
  int ladder = 10;      // M

  void validate() const;
  // 1 + eps^2 / d
  double ladder_ratio() const;
  // dH log(a/(sigma0 eps)) - H log eps + log M + M eps^2
  double entropy_bracket() const;
  Json to_json() const;
};

// Nine d = 1 specs: eps in {0.2, 0.1, 0.05} times three (a, sigma0, H) sizes, M = 8/eps^2.
std::vector<SieveSpec> standard_sieve_lattice();

struct MembershipResult {
  bool member = true;
  std::vector<std::string> violations;
};

// Atoms are taken in stick order; everything past the H-th atom counts as tail mass.
MembershipResult sieve_membership(const MixingMeasure& mixing, const CovarianceSpec& covariance,
                                  const SieveSpec& spec);

struct NetElement {
  std::vector<std::vector<int>> locations;  // H location-grid indices per axis
  std::vector<int> weight_counts;           // simplex lattice point; sums to the resolution
  std::vector<int> ladder;                  // m_j in 1..M, ascending eigenvalue order
  int angle = 0;                            // rotation-net angle index (d = 2)
  bool reflected = false;

  bool operator==(const NetElement&) const = default;
  Json to_json() const;
};

struct NetCardinality {
  int location_points_per_axis = 0;
  int simplex_resolution = 0;   // weights are multiples of 1 / resolution
  int rotation_angles = 0;      // d = 2 only
  double rotation_mesh = 0.0;   // delta
  double log_locations = 0.0;   // dH log |R| per axis
  double log_simplex = 0.0;
  double log_rotations = 0.0;
  double log_ladder = 0.0;      // d log M
  double log_total = 0.0;
  double bracket = 0.0;
  double ratio = 0.0;           // log_total / bracket
  bool explicit_rotations = true;
  std::string notice;
  Json to_json() const;
};

class SieveNet {
 public:
  explicit SieveNet(SieveSpec spec);

  const SieveSpec& spec() const { return spec_; }
  const NetCardinality& cardinality() const { return card_; }

  double location(int index) const;
  Eigen::MatrixXd rotation(int angle, bool reflected) const;

  struct Decoded {
    MixingMeasure mixing;
    CovarianceSpec covariance;
  };
  Decoded decode(const NetElement& e) const;
  // The witness from the covering argument: nearest locations, rounded
  // renormalized weights, ladder cells and nearest rotation.
  NetElement encode(const MixingMeasure& mixing, const CovarianceSpec& covariance) const;

  // Walks the net in mixed-radix order; stops after `limit` elements.
  std::size_t enumerate(const std::function<void(const NetElement&)>& visit, std::size_t limit) const;

 private:
  SieveSpec spec_;
  NetCardinality card_;
};

SieveNet build_net(const SieveSpec& spec);

struct CoverageReport {
  SieveSpec spec;
  std::size_t trials = 0;
  std::size_t covered = 0;
  std::size_t rejected_draws = 0;  // stick-breaking draws failing the tail clause
  double rejection_rate = 0.0;
  double max_distance = 0.0;
  double mean_distance = 0.0;
  double threshold = 0.0;          // 6 eps
  bool pass = false;
  Json first_failure;              // offending member, null when all trials pass
  Json to_json() const;
};

struct CoverageOptions {
  double stick_mass = 1.0;
  int tail_atoms = 20;
  int workers = 1;
};

CoverageReport verify_net_covers(const SieveSpec& spec, std::size_t trials, std::uint64_t seed,
                                 const CoverageOptions& options = {});

struct ComplementMass {
  std::size_t draws = 0;
  double estimate = 0.0;
  double standard_error = 0.0;
  double location_term = 0.0;     // H alpha_bar(([-a, a]^d)^c)
  double stick_term = 0.0;        // P(Gamma(H, |alpha|) < log(1/eps))
  double large_precision_term = 0.0;  // P(eig_d(Sigma^{-1}) > sigma0^{-2})
  double small_precision_term = 0.0;  // P(eig_1(Sigma^{-1}) <= sigma0^{-2} r^{-M})
  double bound = 0.0;
  bool exact_eigen_terms = true;  // false when the inverse-Wishart terms are trace bounds
  Json to_json() const;
};

ComplementMass complement_mass(const SieveSpec& spec, const PriorSpec& prior, std::size_t draws,
                               std::uint64_t seed, int workers = 1);

}  // namespace dpmlab
