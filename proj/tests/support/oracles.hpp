#pragma once

// Reference computations used by the tests. None of these call into the
// library's numerics; they are derived from closed forms.

#include <cstdint>
#include <vector>

#include <boost/rational.hpp>

namespace oracle {

using Q = boost::rational<std::int64_t>;

// Coefficient of t^k in exp(-t^2 / 2). The transform's symbol is the
// reciprocal of the Gaussian moment generating function, so in one
// dimension d_k = -coefficient(k) for k >= 1.
Q inverse_gaussian_mgf_coefficient(int k);

// E[Z^k] / k! for Z ~ N(0, 1).
Q gaussian_moment_over_factorial(int k);

// Polynomial (ascending coefficients) q with (d/dx)^k [x^j phi(x)] = q(x) phi(x).
std::vector<Q> derivative_polynomial(int degree, int k);

// Smallest k >= 1 at which K_sigma T f - f has a non-vanishing sigma^k term for
// some f = x^p phi(x), p <= max_degree. `transform` holds t_0..t_K of
// T = sum_j t_j (sigma D)^j; K_sigma contributes E[Z^i]/i! (sigma D)^i.
// Returns -1 when every order up to K cancels.
int leading_residual_order(const std::vector<Q>& transform, int max_degree);

// Hellinger distance sqrt(int (sqrt p - sqrt q)^2) between two univariate normals.
double normal_hellinger(double m1, double s1, double m2, double s2);

// P(Gamma(shape, rate) < x) by series; independent of Boost.
double gamma_cdf_series(double shape, double rate, double x);

double chi_squared_cdf(double dof, double x);

}  // namespace oracle
