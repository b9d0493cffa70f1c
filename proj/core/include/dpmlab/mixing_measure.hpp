#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dpmlab {

// Finitely supported probability measure on R^d.
struct MixingMeasure {
  std::vector<Eigen::VectorXd> atoms;
  std::vector<double> weights;
  std::optional<double> radius;  // declared support radius (Euclidean)

  static MixingMeasure dirac(const Eigen::VectorXd& at);

  int dimension() const { return atoms.empty() ? 0 : static_cast<int>(atoms.front().size()); }
  std::size_t size() const { return atoms.size(); }

  // Throws std::invalid_argument with the first violated invariant.
  void validate(double tolerance = 1e-12) const;

  // Mixed moment E[z^k] with k given per axis.
  double moment(const std::vector<int>& exponents) const;

  std::string to_json() const;
  static MixingMeasure from_json(const std::string& text);
};

}  // namespace dpmlab
