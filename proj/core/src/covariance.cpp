#include "dpmlab/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace dpmlab {

CovarianceSpec CovarianceSpec::from_matrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::invalid_argument("CovarianceSpec: matrix must be square and non-empty");
  if (!m.allFinite()) throw std::invalid_argument("CovarianceSpec: non-finite entries");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("CovarianceSpec: matrix is not symmetric");
  CovarianceSpec out;
  out.matrix_ = 0.5 * (m + m.transpose());
  bool diag = true;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (i != j && out.matrix_(i, j) != 0.0) diag = false;
  out.diagonal_ = diag;
  out.finish();
  return out;
}

CovarianceSpec CovarianceSpec::diagonal(const Eigen::VectorXd& variances) {
  return from_matrix(variances.asDiagonal().toDenseMatrix());
}

CovarianceSpec CovarianceSpec::isotropic(int dimension, double variance) {
  return diagonal(Eigen::VectorXd::Constant(dimension, variance));
}

void CovarianceSpec::finish() {
  const int d = dimension();
  if (diagonal_) {
    std::vector<std::pair<double, int>> ev;
    for (int i = 0; i < d; ++i) ev.emplace_back(matrix_(i, i), i);
    std::sort(ev.begin(), ev.end());
    eigenvalues_.resize(d);
    eigenvectors_ = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      eigenvalues_[i] = ev[static_cast<std::size_t>(i)].first;
      eigenvectors_(ev[static_cast<std::size_t>(i)].second, i) = 1.0;
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix_);
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
  }
  const double smallest = eigenvalues_[0];
  if (!(smallest > 0.0)) {
    std::ostringstream os;
    os << "CovarianceSpec: matrix is not positive definite (smallest eigenvalue " << smallest << ")";
    throw NotPositiveDefinite(os.str(), smallest);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(matrix_);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("CovarianceSpec: Cholesky factorisation failed", smallest);
  chol_ = llt.matrixL();
  inverse_ = llt.solve(Eigen::MatrixXd::Identity(d, d));
  inverse_ = 0.5 * (inverse_ + inverse_.transpose());
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
}

double CovarianceSpec::mahalanobis_squared(const Eigen::VectorXd& v) const {
  const Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>().solve(v);
  return w.squaredNorm();
}

double CovarianceSpec::log_density(const Eigen::VectorXd& centered) const {
  const double d = dimension();
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det_ + mahalanobis_squared(centered));
}

CovarianceSpec CovarianceSpec::plus_diagonal(const Eigen::VectorXd& extra) const {
  Eigen::MatrixXd m = matrix_;
  m.diagonal() += extra;
  return from_matrix(m);
}

}  // namespace dpmlab
