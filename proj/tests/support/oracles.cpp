#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace oracle {

Q inverse_gaussian_mgf_coefficient(int k) {
  if (k < 0) throw std::invalid_argument("negative order");
  if (k % 2 != 0) return Q(0);
  const int j = k / 2;
  Q c(1);
  for (int i = 1; i <= j; ++i) c *= Q(-1, 2 * i);  // (-1/2)^j / j!
  return c;
}

Q gaussian_moment_over_factorial(int k) {
  if (k % 2 != 0) return Q(0);
  // (k-1)!! / k! = 1 / (2^{k/2} (k/2)!)
  Q c(1);
  for (int i = 1; i <= k / 2; ++i) c *= Q(1, 2 * i);
  return c;
}

std::vector<Q> derivative_polynomial(int degree, int k) {
  std::vector<Q> q(static_cast<std::size_t>(degree) + 1, Q(0));
  q.back() = Q(1);
  for (int step = 0; step < k; ++step) {
    // (q phi)' = (q' - x q) phi
    std::vector<Q> next(q.size() + 1, Q(0));
    for (std::size_t i = 1; i < q.size(); ++i) next[i - 1] += q[i] * Q(static_cast<std::int64_t>(i));
    for (std::size_t i = 0; i < q.size(); ++i) next[i + 1] -= q[i];
    q = std::move(next);
  }
  return q;
}

int leading_residual_order(const std::vector<Q>& transform, int max_degree) {
  const int top = static_cast<int>(transform.size()) - 1;
  for (int k = 1; k <= top; ++k) {
    Q e(0);
    for (int i = 0; i <= k; ++i) e += gaussian_moment_over_factorial(i) * transform[static_cast<std::size_t>(k - i)];
    if (e == Q(0)) continue;
    for (int p = 0; p <= max_degree; ++p) {
      const auto q = derivative_polynomial(p, k);
      for (const Q& c : q)
        if (c != Q(0)) return k;
    }
  }
  return -1;
}

double normal_hellinger(double m1, double s1, double m2, double s2) {
  const double v = s1 * s1 + s2 * s2;
  const double bc = std::sqrt(2.0 * s1 * s2 / v) * std::exp(-(m1 - m2) * (m1 - m2) / (4.0 * v));
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * bc));
}

double gamma_cdf_series(double shape, double rate, double x) {
  if (x <= 0.0) return 0.0;
  const double y = rate * x;
  // P(a, y) = y^a e^{-y} / Gamma(a + 1) * sum_n y^n / ((a+1)...(a+n))
  double term = 1.0, sum = 1.0;
  for (int n = 1; n < 10000; ++n) {
    term *= y / (shape + n);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return std::exp(shape * std::log(y) - y - std::lgamma(shape + 1.0)) * sum;
}

double chi_squared_cdf(double dof, double x) {
  return boost::math::cdf(boost::math::chi_squared_distribution<double>(dof), x);
}

}  // namespace oracle
