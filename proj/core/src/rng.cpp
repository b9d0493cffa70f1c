#include "dpmlab/rng.hpp"

#include <stdexcept>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace dpmlab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

// Boost.Random distributions give identical streams across standard libraries.
double draw_uniform(Rng& rng) { return boost::random::uniform_01<double>()(rng); }

double draw_normal(Rng& rng) { return boost::random::normal_distribution<double>()(rng); }

double draw_gamma(Rng& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("draw_gamma: parameters must be positive");
  return boost::random::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

double draw_beta(Rng& rng, double a, double b) {
  return boost::random::beta_distribution<double>(a, b)(rng);
}

double draw_chi_squared(Rng& rng, double dof) {
  return boost::random::chi_squared_distribution<double>(dof)(rng);
}

Eigen::VectorXd draw_standard_normal_vector(Rng& rng, int dimension) {
  boost::random::normal_distribution<double> nd;
  Eigen::VectorXd z(dimension);
  for (int i = 0; i < dimension; ++i) z[i] = nd(rng);
  return z;
}

}  // namespace dpmlab
