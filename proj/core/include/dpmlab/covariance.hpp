#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Cholesky>

namespace dpmlab {

class NotPositiveDefinite : public std::invalid_argument {
 public:
  NotPositiveDefinite(const std::string& what, double smallest_eigenvalue)
      : std::invalid_argument(what), smallest_eigenvalue_(smallest_eigenvalue) {}
  double smallest_eigenvalue() const { return smallest_eigenvalue_; }

 private:
  double smallest_eigenvalue_;
};

// Symmetric positive-definite matrix with a cached eigen-decomposition.
class CovarianceSpec {
 public:
  static CovarianceSpec from_matrix(const Eigen::MatrixXd& m);
  static CovarianceSpec diagonal(const Eigen::VectorXd& variances);
  static CovarianceSpec isotropic(int dimension, double variance);

  int dimension() const { return static_cast<int>(matrix_.rows()); }
  bool is_diagonal() const { return diagonal_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const Eigen::MatrixXd& inverse() const { return inverse_; }
  const Eigen::MatrixXd& cholesky_factor() const { return chol_; }  // lower, matrix = L L^T
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }  // ascending
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  double log_det() const { return log_det_; }

  double mahalanobis_squared(const Eigen::VectorXd& v) const;
  double log_density(const Eigen::VectorXd& centered) const;  // log phi_Sigma
  CovarianceSpec plus_diagonal(const Eigen::VectorXd& extra) const;
  Eigen::VectorXd transform_standard(const Eigen::VectorXd& z) const { return chol_ * z; }

 private:
  CovarianceSpec() = default;
  void finish();

  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd inverse_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  double log_det_ = 0.0;
  bool diagonal_ = false;
};

}  // namespace dpmlab
