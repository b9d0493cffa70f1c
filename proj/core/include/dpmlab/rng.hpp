#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace dpmlab {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Independent stream `stream` derived from a 64-bit master seed. A draw is
// reproducible from (seed, stream) alone.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

double draw_uniform(Rng& rng);
double draw_normal(Rng& rng);
double draw_gamma(Rng& rng, double shape, double rate);
double draw_beta(Rng& rng, double a, double b);
double draw_chi_squared(Rng& rng, double dof);
Eigen::VectorXd draw_standard_normal_vector(Rng& rng, int dimension);

}  // namespace dpmlab
