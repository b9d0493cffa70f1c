#include "dpmlab/sieve_entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>
#include <Eigen/Eigenvalues>

#include "dpmlab/divergences.hpp"
#include "dpmlab/grid.hpp"
#include "dpmlab/parallel.hpp"
#include "dpmlab/test_densities.hpp"

namespace dpmlab {

namespace {

constexpr double kLadderSlack = 1e-9;
constexpr long long kMaxExplicitAngles = 100'000'000;
constexpr std::size_t kMaxRejections = 100'000;
constexpr std::size_t kChunk = 4096;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

Json measure_json(const MixingMeasure& m) {
  Json atoms = Json::array();
  for (const auto& a : m.atoms) atoms.push_back(std::vector<double>(a.data(), a.data() + a.size()));
  return Json{{"atoms", atoms}, {"weights", m.weights}};
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

// Largest-remainder rounding of a probability vector onto multiples of 1/n.
std::vector<int> round_to_simplex(const std::vector<double>& p, int n) {
  std::vector<int> k(p.size());
  std::vector<std::pair<double, std::size_t>> frac;
  int used = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double scaled = p[i] * n;
    k[i] = static_cast<int>(std::floor(scaled));
    used += k[i];
    frac.emplace_back(scaled - k[i], i);
  }
  std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int r = 0; r < n - used; ++r) ++k[frac[static_cast<std::size_t>(r) % frac.size()].second];
  return k;
}

}  // namespace

void SieveSpec::validate() const {
  if (dimension < 1) throw std::invalid_argument("SieveSpec: dimension must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("SieveSpec: eps must lie in (0, 1)");
  if (!(radius > 0.0) || !(sigma0 > 0.0)) throw std::invalid_argument("SieveSpec: a and sigma0 must be positive");
  if (atoms < dimension || ladder < dimension) throw std::invalid_argument("SieveSpec: H and M must be >= d");
}

double SieveSpec::ladder_ratio() const { return 1.0 + epsilon * epsilon / dimension; }

double SieveSpec::entropy_bracket() const {
  return dimension * atoms * std::log(radius / (sigma0 * epsilon)) - atoms * std::log(epsilon) + std::log(ladder) +
         ladder * epsilon * epsilon;
}

Json SieveSpec::to_json() const {
  return Json{{"d", dimension}, {"eps", epsilon}, {"a", radius}, {"sigma0", sigma0}, {"H", atoms}, {"M", ladder}};
}

std::vector<SieveSpec> standard_sieve_lattice() {
  struct Size {
    double a, sigma0;
    int h;
  };
  const Size sizes[] = {{5.0, 0.15, 8}, {6.0, 0.1, 10}, {7.0, 0.08, 12}};
  std::vector<SieveSpec> out;
  for (const auto& s : sizes)
    for (double eps : {0.2, 0.1, 0.05}) {
      // M eps^2 = 8 keeps the eigenvalue window at about e^8 for every eps.
      const int m = static_cast<int>(std::ceil(8.0 / (eps * eps) - 1e-9));
      out.push_back(SieveSpec{1, eps, s.a, s.sigma0, s.h, m});
    }
  return out;
}

MembershipResult sieve_membership(const MixingMeasure& mixing, const CovarianceSpec& covariance,
                                  const SieveSpec& spec) {
  spec.validate();
  MembershipResult r;
  const auto fail = [&](const std::string& why) {
    r.member = false;
    r.violations.push_back(why);
  };
  const std::size_t h_max = std::min<std::size_t>(mixing.size(), static_cast<std::size_t>(spec.atoms));
  for (std::size_t h = 0; h < h_max; ++h) {
    if (mixing.atoms[h].cwiseAbs().maxCoeff() > spec.radius) {
      std::ostringstream os;
      os << "location: atom " << h + 1 << " lies outside [-a, a]^d";
      fail(os.str());
    }
  }
  double tail = 0.0;
  for (std::size_t h = h_max; h < mixing.size(); ++h) tail += mixing.weights[h];
  if (!(tail < spec.epsilon)) {
    std::ostringstream os;
    os << "tail: mass " << tail << " beyond atom " << spec.atoms << " is not below eps";
    fail(os.str());
  }
  const double lo = spec.sigma0 * spec.sigma0;
  const double hi = lo * std::pow(spec.ladder_ratio(), spec.ladder);
  const auto& eig = covariance.eigenvalues();
  for (Eigen::Index j = 0; j < eig.size(); ++j) {
    std::ostringstream os;
    if (eig(j) < lo) {
      os << "eigenvalue: " << eig(j) << " below sigma0^2";
      fail(os.str());
    } else if (!(eig(j) < hi)) {
      os << "eigenvalue: " << eig(j) << " not below sigma0^2 (1 + eps^2/d)^M";
      fail(os.str());
    }
  }
  return r;
}

Json NetElement::to_json() const {
  return Json{{"locations", locations},
              {"weight_counts", weight_counts},
              {"ladder", ladder},
              {"angle", angle},
              {"reflected", reflected}};
}

Json NetCardinality::to_json() const {
  Json j{{"location_points_per_axis", location_points_per_axis},
         {"simplex_resolution", simplex_resolution},
         {"rotation_mesh", rotation_mesh},
         {"log_locations", log_locations},
         {"log_simplex", log_simplex},
         {"log_rotations", log_rotations},
         {"log_ladder", log_ladder},
         {"log_total", log_total},
         {"bracket", bracket},
         {"ratio", ratio},
         {"explicit_rotations", explicit_rotations}};
  if (rotation_angles > 0) j["rotation_angles"] = rotation_angles;
  if (!notice.empty()) j["notice"] = notice;
  return j;
}

SieveNet::SieveNet(SieveSpec spec) : spec_(spec) {
  spec_.validate();
  const int d = spec_.dimension;
  const int h = spec_.atoms;
  const double eps = spec_.epsilon;
  // Per-axis error a/n < sigma0 eps / sqrt(d) keeps the Euclidean error below sigma0 eps.
  const double per_axis = spec_.radius * std::sqrt(static_cast<double>(d)) / (spec_.sigma0 * eps);
  if (per_axis > 1e9) throw std::invalid_argument("SieveNet: location grid too fine");
  card_.location_points_per_axis = static_cast<int>(std::floor(per_axis)) + 1;
  card_.simplex_resolution = static_cast<int>(std::ceil(h / eps - 1e-9));
  card_.log_locations = static_cast<double>(d) * h * std::log(card_.location_points_per_axis);
  const double n = card_.simplex_resolution;
  card_.log_simplex = std::lgamma(n + h) - std::lgamma(n + 1.0) - std::lgamma(static_cast<double>(h));
  card_.rotation_mesh = eps * eps / (3.0 * d * std::pow(spec_.ladder_ratio(), spec_.ladder));
  if (d == 2) {
    const double angles = std::ceil(std::numbers::pi / card_.rotation_mesh);
    if (angles <= static_cast<double>(kMaxExplicitAngles)) {
      card_.rotation_angles = static_cast<int>(angles);
      card_.log_rotations = std::log(2.0 * angles);
    } else {
      card_.explicit_rotations = false;
      card_.log_rotations = std::log(2.0 * angles);
      card_.notice = "rotation mesh too fine to enumerate; counting only";
    }
  } else if (d >= 3) {
    card_.explicit_rotations = false;
    card_.log_rotations = -0.5 * d * (d - 1) * std::log(card_.rotation_mesh);
    card_.notice = "rotation net for d >= 3 is counted from the delta^{-d(d-1)/2} bound, not enumerated";
  }
  card_.log_ladder = d * std::log(static_cast<double>(spec_.ladder));
  card_.log_total = card_.log_locations + card_.log_simplex + card_.log_rotations + card_.log_ladder;
  card_.bracket = spec_.entropy_bracket();
  card_.ratio = card_.log_total / card_.bracket;
}

SieveNet build_net(const SieveSpec& spec) { return SieveNet(spec); }

double SieveNet::location(int index) const {
  const int n = card_.location_points_per_axis;
  return -spec_.radius + (index + 0.5) * 2.0 * spec_.radius / n;
}

Eigen::MatrixXd SieveNet::rotation(int angle, bool reflected) const {
  const int d = spec_.dimension;
  if (d == 1) return Eigen::MatrixXd::Identity(1, 1);
  if (d != 2 || !card_.explicit_rotations) throw std::logic_error("SieveNet: rotations are counted, not enumerated");
  const double theta = 2.0 * std::numbers::pi * angle / card_.rotation_angles;
  Eigen::MatrixXd p(2, 2);
  p << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  if (reflected) p.col(1) *= -1.0;
  return p;
}

SieveNet::Decoded SieveNet::decode(const NetElement& e) const {
  const int d = spec_.dimension;
  if (e.locations.size() != static_cast<std::size_t>(spec_.atoms) ||
      e.weight_counts.size() != static_cast<std::size_t>(spec_.atoms) || e.ladder.size() != static_cast<std::size_t>(d))
    throw std::invalid_argument("SieveNet::decode: element does not belong to this net");
  MixingMeasure m;
  for (int h = 0; h < spec_.atoms; ++h) {
    Eigen::VectorXd z(d);
    for (int j = 0; j < d; ++j) z(j) = location(e.locations[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)]);
    m.atoms.push_back(z);
    m.weights.push_back(static_cast<double>(e.weight_counts[static_cast<std::size_t>(h)]) / card_.simplex_resolution);
  }
  Eigen::VectorXd eig(d);
  const double r = spec_.ladder_ratio();
  for (int j = 0; j < d; ++j) eig(j) = spec_.sigma0 * spec_.sigma0 * std::pow(r, e.ladder[static_cast<std::size_t>(j)] - 1);
  const Eigen::MatrixXd p = rotation(e.angle, e.reflected);
  Eigen::MatrixXd s = p * eig.asDiagonal() * p.transpose();
  s = 0.5 * (s + s.transpose());
  return {std::move(m), CovarianceSpec::from_matrix(s)};
}

NetElement SieveNet::encode(const MixingMeasure& mixing, const CovarianceSpec& covariance) const {
  const int d = spec_.dimension;
  const int n = card_.location_points_per_axis;
  NetElement e;
  std::vector<double> head;
  for (int h = 0; h < spec_.atoms; ++h) {
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    double w = 0.0;
    if (static_cast<std::size_t>(h) < mixing.size()) {
      const auto& z = mixing.atoms[static_cast<std::size_t>(h)];
      for (int j = 0; j < d; ++j) {
        const int k = static_cast<int>(std::floor((z(j) + spec_.radius) * n / (2.0 * spec_.radius)));
        idx[static_cast<std::size_t>(j)] = std::clamp(k, 0, n - 1);
      }
      w = mixing.weights[static_cast<std::size_t>(h)];
    }
    e.locations.push_back(idx);
    head.push_back(w);
  }
  const double total = std::accumulate(head.begin(), head.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("SieveNet::encode: the first H atoms carry no mass");
  for (double& w : head) w /= total;
  e.weight_counts = round_to_simplex(head, card_.simplex_resolution);

  const double log_r = std::log(spec_.ladder_ratio());
  const auto& eig = covariance.eigenvalues();
  for (int j = 0; j < d; ++j) {
    const double t = std::log(eig(j) / (spec_.sigma0 * spec_.sigma0)) / log_r;
    e.ladder.push_back(std::clamp(static_cast<int>(std::floor(t + kLadderSlack)) + 1, 1, spec_.ladder));
  }
  if (d == 2) {
    if (!card_.explicit_rotations) throw std::logic_error("SieveNet::encode: rotation net is not explicit");
    const Eigen::MatrixXd& p = covariance.eigenvectors();
    e.reflected = p.determinant() < 0.0;
    double theta = std::atan2(p(1, 0), p(0, 0));
    if (theta < 0.0) theta += 2.0 * std::numbers::pi;
    const double step = 2.0 * std::numbers::pi / card_.rotation_angles;
    e.angle = static_cast<int>(std::llround(theta / step)) % card_.rotation_angles;
  } else if (d >= 3) {
    throw std::logic_error("SieveNet::encode: rotation net is not explicit for d >= 3");
  }
  return e;
}

std::size_t SieveNet::enumerate(const std::function<void(const NetElement&)>& visit, std::size_t limit) const {
  const int d = spec_.dimension;
  if (d >= 3 || !card_.explicit_rotations) throw std::logic_error("SieveNet::enumerate: net is counted, not enumerated");
  const int h = spec_.atoms;
  const int n = card_.location_points_per_axis;
  const int rotations = d == 2 ? 2 * card_.rotation_angles : 1;
  std::size_t visited = 0;
  NetElement e;
  e.locations.assign(static_cast<std::size_t>(h), std::vector<int>(static_cast<std::size_t>(d), 0));
  e.weight_counts.assign(static_cast<std::size_t>(h), 0);
  e.ladder.assign(static_cast<std::size_t>(d), 1);

  // Inner odometer over locations, ladder and rotation for a fixed weight vector.
  const auto sweep = [&]() {
    std::vector<int> digits(static_cast<std::size_t>(h * d + d + 1), 0);
    while (visited < limit) {
      for (int a = 0; a < h; ++a)
        for (int j = 0; j < d; ++j)
          e.locations[static_cast<std::size_t>(a)][static_cast<std::size_t>(j)] = digits[static_cast<std::size_t>(a * d + j)];
      for (int j = 0; j < d; ++j) e.ladder[static_cast<std::size_t>(j)] = digits[static_cast<std::size_t>(h * d + j)] + 1;
      const int rot = digits.back();
      e.angle = rot / 2;
      e.reflected = d == 2 && rot % 2 == 1;
      visit(e);
      ++visited;
      std::size_t pos = 0;
      for (; pos < digits.size(); ++pos) {
        const int base = pos < static_cast<std::size_t>(h * d) ? n : (pos + 1 < digits.size() ? spec_.ladder : rotations);
        if (++digits[pos] < base) break;
        digits[pos] = 0;
      }
      if (pos == digits.size()) return;
    }
  };

  const int total = card_.simplex_resolution;
  std::function<void(int, int)> compositions = [&](int part, int left) {
    if (visited >= limit) return;
    if (part == h - 1) {
      e.weight_counts[static_cast<std::size_t>(part)] = left;
      sweep();
      return;
    }
    for (int k = 0; k <= left && visited < limit; ++k) {
      e.weight_counts[static_cast<std::size_t>(part)] = k;
      compositions(part + 1, left - k);
    }
  };
  compositions(0, total);
  return visited;
}

Json CoverageReport::to_json() const {
  return Json{{"spec", spec.to_json()},
              {"trials", trials},
              {"covered", covered},
              {"rejected_draws", rejected_draws},
              {"rejection_rate", rejection_rate},
              {"max_distance", max_distance},
              {"mean_distance", mean_distance},
              {"threshold", threshold},
              {"verdict", pass ? "pass" : "fail"},
              {"first_failure", first_failure}};
}

CoverageReport verify_net_covers(const SieveSpec& spec, std::size_t trials, std::uint64_t seed,
                                 const CoverageOptions& options) {
  const SieveNet net(spec);
  const int d = spec.dimension;
  if (d > 2) throw std::invalid_argument("verify_net_covers: explicit nets exist for d <= 2 only");
  if (trials == 0) throw std::invalid_argument("verify_net_covers: trials must be positive");
  const double log_span = spec.ladder * std::log(spec.ladder_ratio());
  const double s_max = spec.sigma0 * std::exp(0.5 * log_span);
  const double half = 2.0 * spec.radius + 8.0 * s_max;
  const double step = spec.sigma0 / (d == 1 ? 16.0 : 5.0);
  const int cap = d == 1 ? 1 << 16 : 512;
  const int points = std::clamp(static_cast<int>(std::ceil(2.0 * half / step)), d == 1 ? 2048 : 128, cap);
  const GridSpec grid = GridSpec::cube(d, half, points);

  std::vector<double> distance(trials, 0.0);
  std::vector<std::size_t> rejections(trials, 0);
  std::vector<Json> members(trials);
  parallel_for(trials, options.workers, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    StickBreakingDraw head;
    while (true) {
      head = draw_sticks(spec.atoms, options.stick_mass, rng);
      if (head.remainder < spec.epsilon) break;
      if (++rejections[i] > kMaxRejections) throw std::runtime_error("verify_net_covers: tail clause rejects every draw");
    }
    const auto tail = draw_sticks(options.tail_atoms, options.stick_mass, rng);
    MixingMeasure m;
    for (int h = 0; h < spec.atoms; ++h) {
      Eigen::VectorXd z(d);
      for (int j = 0; j < d; ++j) z(j) = spec.radius * (2.0 * draw_uniform(rng) - 1.0);
      m.atoms.push_back(z);
      m.weights.push_back(head.weights[static_cast<std::size_t>(h)]);
    }
    for (int h = 0; h < options.tail_atoms; ++h) {
      Eigen::VectorXd z(d);
      for (int j = 0; j < d; ++j) z(j) = 2.0 * spec.radius * (2.0 * draw_uniform(rng) - 1.0);
      m.atoms.push_back(z);
      double w = tail.weights[static_cast<std::size_t>(h)];
      if (h + 1 == options.tail_atoms) w += tail.remainder;
      m.weights.push_back(head.remainder * w);
    }
    Eigen::VectorXd eig(d);
    for (int j = 0; j < d; ++j) eig(j) = spec.sigma0 * spec.sigma0 * std::exp(draw_uniform(rng) * log_span);
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(d, d);
    if (d == 2) {
      const double theta = 2.0 * std::numbers::pi * draw_uniform(rng);
      p << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
      if (draw_uniform(rng) < 0.5) p.col(1) *= -1.0;
    }
    Eigen::MatrixXd s = p * eig.asDiagonal() * p.transpose();
    s = 0.5 * (s + s.transpose());
    const auto cov = CovarianceSpec::from_matrix(s);
    if (!sieve_membership(m, cov, spec).member) throw std::logic_error("verify_net_covers: sampled a non-member");

    const auto witness = net.decode(net.encode(m, cov));
    const auto f = make_gaussian_mixture(m, cov)->values_on_grid(grid);
    const auto g = make_gaussian_mixture(witness.mixing, witness.covariance)->values_on_grid(grid);
    distance[i] = l1_on_grid(grid, f, g);
    members[i] = Json{{"mixing", measure_json(m)}, {"covariance", matrix_json(s)}, {"distance", distance[i]}};
  });

  CoverageReport r;
  r.spec = spec;
  r.trials = trials;
  r.threshold = 6.0 * spec.epsilon;
  for (std::size_t i = 0; i < trials; ++i) {
    r.rejected_draws += rejections[i];
    r.max_distance = std::max(r.max_distance, distance[i]);
    r.mean_distance += distance[i] / static_cast<double>(trials);
    if (distance[i] <= r.threshold) {
      ++r.covered;
    } else if (r.first_failure.is_null()) {
      r.first_failure = members[i];
    }
  }
  r.rejection_rate = static_cast<double>(r.rejected_draws) / static_cast<double>(r.rejected_draws + trials);
  r.pass = r.covered == trials;
  return r;
}

Json ComplementMass::to_json() const {
  return Json{{"draws", draws},
              {"estimate", estimate},
              {"stderr", standard_error},
              {"location_term", location_term},
              {"stick_term", stick_term},
              {"large_precision_term", large_precision_term},
              {"small_precision_term", small_precision_term},
              {"bound", bound},
              {"exact_eigen_terms", exact_eigen_terms}};
}

ComplementMass complement_mass(const SieveSpec& spec, const PriorSpec& prior, std::size_t draws,
                               std::uint64_t seed, int workers) {
  spec.validate();
  prior.validate();
  const int d = spec.dimension;
  if (prior.dimension() != d) throw std::invalid_argument("complement_mass: dimension mismatch");
  if (draws < 10000) throw std::invalid_argument("complement_mass: need at least 10^4 draws");
  const Eigen::MatrixXd& base = prior.base_covariance;
  if (!base.isDiagonal()) throw std::invalid_argument("complement_mass: base covariance must be diagonal");

  ComplementMass c;
  c.draws = draws;
  double inside = 1.0;
  for (int j = 0; j < d; ++j) {
    const double sd = std::sqrt(base(j, j));
    const double mu = prior.base_mean(j);
    inside *= normal_cdf((spec.radius - mu) / sd) - normal_cdf((-spec.radius - mu) / sd);
  }
  c.location_term = spec.atoms * (1.0 - inside);
  c.stick_term = stick_tail_probability(spec.atoms, prior.total_mass, spec.epsilon).exact;

  const double x = 1.0 / (spec.sigma0 * spec.sigma0);
  const double y = x * std::pow(spec.ladder_ratio(), -spec.ladder);
  using boost::math::gamma_p;
  using boost::math::gamma_q;
  switch (prior.kind) {
    case CovariancePriorKind::InverseGammaDiagonal:
      c.large_precision_term = 1.0 - std::pow(gamma_p(prior.shape, prior.rate * x), d);
      c.small_precision_term = 1.0 - std::pow(gamma_q(prior.shape, prior.rate * y), d);
      break;
    case CovariancePriorKind::SquaredInverseGammaDiagonal:
      c.large_precision_term = 1.0 - std::pow(gamma_p(prior.shape, prior.rate * std::sqrt(x)), d);
      c.small_precision_term = 1.0 - std::pow(gamma_q(prior.shape, prior.rate * std::sqrt(y)), d);
      break;
    case CovariancePriorKind::InverseWishart: {
      const double nu = prior.dof;
      if (d == 1) {
        const double psi = prior.scale(0, 0);
        c.large_precision_term = gamma_q(0.5 * nu, 0.5 * x * psi);
        c.small_precision_term = gamma_p(0.5 * nu, 0.5 * y * psi);
      } else {
        // eig_d(W) <= eig_d(Psi^{-1}) tr(A A^T) with tr ~ chi^2_{nu d}; eig_1(A A^T)^{-1} <= tr((A A^T)^{-1})
        // and each diagonal entry of (A A^T)^{-1} is an inverse chi^2_{nu - d + 1}.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prior.scale.inverse(), Eigen::EigenvaluesOnly);
        const double top = es.eigenvalues()(d - 1);
        const double bottom = es.eigenvalues()(0);
        c.large_precision_term = gamma_q(0.5 * nu * d, 0.5 * x / top);
        c.small_precision_term = std::min(1.0, d * gamma_p(0.5 * (nu - d + 1.0), 0.5 * d * y / bottom));
        c.exact_eigen_terms = false;
      }
      break;
    }
  }
  c.bound = c.location_term + c.stick_term + c.large_precision_term + c.small_precision_term;

  const std::size_t chunks = (draws + kChunk - 1) / kChunk;
  std::vector<std::size_t> misses(chunks, 0);
  parallel_for(chunks, workers, [&](std::size_t k) {
    Rng rng = make_stream(seed, k);
    const std::size_t end = std::min(draws, (k + 1) * kChunk);
    for (std::size_t i = k * kChunk; i < end; ++i) {
      auto sticks = draw_sticks(spec.atoms, prior.total_mass, rng);
      MixingMeasure m;
      for (int h = 0; h < spec.atoms; ++h) m.atoms.push_back(draw_base_atom(prior, rng));
      m.weights = sticks.weights;
      m.atoms.push_back(draw_base_atom(prior, rng));
      m.weights.push_back(sticks.remainder);
      const auto cov = draw_covariance(prior, rng).covariance;
      if (!sieve_membership(m, cov, spec).member) ++misses[k];
    }
  });
  const double total = static_cast<double>(std::accumulate(misses.begin(), misses.end(), std::size_t{0}));
  c.estimate = total / static_cast<double>(draws);
  c.standard_error = std::sqrt(c.estimate * (1.0 - c.estimate) / static_cast<double>(draws));
  return c;
}

}  // namespace dpmlab
