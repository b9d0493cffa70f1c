#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dpmlab/grid.hpp"
#include "dpmlab/mixing_measure.hpp"
#include "dpmlab/report_io.hpp"

namespace dpmlab {

// Atom-count constant D in D [max(a/sigma, 1) log(1/eps)]^d, calibrated by
// the discretization calibration test over the Gaussian-kernel suite.
inline constexpr double kSupportCountConstant = 2.0;

// Fraction of eps allotted to the per-cell error model when sizing cells.
inline constexpr double kCellErrorFraction = 0.25;

// One axis of a product measure: an integrable density on [lower, upper].
// It need not be normalized.
struct AxisMeasure {
  std::function<double(double)> density;
  double lower = -1.0;
  double upper = 1.0;
};

class ProductMeasure {
 public:
  explicit ProductMeasure(std::vector<AxisMeasure> axes);
  static ProductMeasure uniform_box(int dimension, double half_width);

  int dimension() const { return static_cast<int>(axes_.size()); }
  const AxisMeasure& axis(int j) const { return axes_[static_cast<std::size_t>(j)]; }
  // Euclidean radius of the smallest centred ball holding the box.
  double radius() const;

  // Fine quadrature of the normalized axis law restricted to [lo, hi]:
  // nodes and weights whose sum is the mass of [lo, hi].
  void axis_quadrature(int j, double lo, double hi, double max_panel, std::vector<double>& nodes,
                       std::vector<double>& weights) const;

  double moment(const std::vector<int>& exponents) const;

 private:
  std::vector<AxisMeasure> axes_;
  std::vector<double> mass_;
};

// k-point Gauss-Legendre rule on [-1, 1] via the Jacobi matrix.
void gauss_legendre(int points, std::vector<double>& nodes, std::vector<double>& weights);

// k-point Gauss rule for a finitely supported measure (Stieltjes procedure).
// Returns false when the measure has fewer than k support points.
bool gauss_rule(const std::vector<double>& support, const std::vector<double>& mass, int points,
                std::vector<double>& nodes, std::vector<double>& weights);

// Reduces a weighted point set to at most `functions.size() + 1` points carrying
// the same total mass and integrals of every function (Caratheodory). Weights
// stay non-negative.
MixingMeasure caratheodory_reduce(const MixingMeasure& measure,
                                  const std::vector<std::function<double(const Eigen::VectorXd&)>>& functions);

struct DiscretizationOptions {
  std::optional<int> points_per_cell;  // k; default ceil(log(1/eps))
  std::optional<int> cells_per_axis;   // default from the per-cell error model
  bool measure_errors = true;
};

struct DiscretizationResult {
  MixingMeasure measure;
  int points_per_cell = 0;            // k
  int moment_order = 0;               // 2k - 2, matched per axis
  std::vector<int> cells_per_axis;
  double cell_width = 0.0;
  double support_radius = 0.0;
  std::size_t atom_bound = 0;         // D [max(a/sigma, 1) log(1/eps)]^d
  double support_constant = kSupportCountConstant;
  bool unchanged = false;             // input was already small enough
  bool fallback = false;              // support points copied (degenerate moment system)
  std::string warning;
  double sup_error = 0.0;             // ||p_{P0,sigma} - p_{F,sigma}||_inf
  double l1_error = 0.0;
  double sup_scale = 0.0;             // eps / sigma^d
  double l1_scale = 0.0;              // eps sqrt(log(1/eps))
  Json to_json() const;
};

// L1 error per unit mass of a k-point Gauss-Legendre rule for a uniform cell
// of width w under the N(0, sigma^2) kernel.
double cell_error_model(double width, double sigma, int points);

DiscretizationResult moment_match_discretize(const ProductMeasure& p0, double sigma, double epsilon,
                                             const DiscretizationOptions& options = {});
DiscretizationResult moment_match_discretize(const MixingMeasure& p0, double sigma, double epsilon,
                                             const DiscretizationOptions& options = {});

std::size_t support_count_bound(double radius, double sigma, double epsilon, int dimension,
                                double constant = kSupportCountConstant);

struct SnapResult {
  MixingMeasure measure;
  double mesh = 0.0;            // sigma * eps
  int max_index = 0;            // |n_i| <= max_index
  double sup_increment = 0.0;
  double l1_increment = 0.0;
  double sup_scale = 0.0;       // eps^2 / sigma^d
  double l1_scale = 0.0;        // eps
  Json to_json() const;
};

// Moves every atom to the nearest point of the lattice sigma*eps*Z^d with
// |n_i| < ceil(a / (sigma eps)). Weights and atom order are kept.
SnapResult snap_to_grid(const MixingMeasure& f, double sigma, double epsilon, double radius);

class PartitionCoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PartitionCell {
  std::function<bool(const Eigen::VectorXd&)> contains;
  Eigen::VectorXd representative;
  double diameter = 0.0;
};

// Cell 0 is the remainder cell V_0 and has no representative.
class Partition {
 public:
  Partition(PartitionCell remainder, std::vector<PartitionCell> cells);
  // Equal boxes on [lower, upper] with centres as representatives; V_0 is the rest of R^d.
  static Partition boxes(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, const std::vector<int>& counts);

  std::size_t size() const { return cells_.size() + 1; }
  const PartitionCell& remainder() const { return remainder_; }
  const PartitionCell& cell(std::size_t j) const { return cells_.at(j - 1); }
  // Index of the cell holding z (0 for V_0); PartitionCoverageError if none does.
  std::size_t locate(const Eigen::VectorXd& z) const;

 private:
  PartitionCell remainder_;
  std::vector<PartitionCell> cells_;
};

struct PartitionBoundReport {
  double sup_distance = 0.0;
  double l1_distance = 0.0;
  double max_diameter = 0.0;
  double mass_mismatch = 0.0;     // sum_j |F(V_j) - p_j|
  double sup_bound = 0.0;         // max diam / sigma^{d+1} + mismatch / sigma^d
  double l1_bound = 0.0;          // max diam / sigma + mismatch
  double sup_constant = 0.0;      // measured / bound, the implied proportionality constant
  double l1_constant = 0.0;
  Json to_json() const;
};

PartitionBoundReport partition_perturbation_bound(const MixingMeasure& f, const MixingMeasure& f_prime,
                                                  const Partition& partition, double sigma);

// p_{F,sigma} = sum_i w_i phi_sigma(x - z_i) at every grid point.
std::vector<double> location_mixture_on_grid(const GridSpec& grid, const MixingMeasure& f, double sigma);

}  // namespace dpmlab
