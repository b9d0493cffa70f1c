#include "dpmlab/measure_discretization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dpmlab/test_densities.hpp"

namespace dpmlab {

namespace {

constexpr int kPanelPoints = 20;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double x, double sd) {
  const double u = x / sd;
  return std::exp(-0.5 * u * u) / (std::sqrt(2.0 * std::numbers::pi) * sd);
}

const std::vector<double>& panel_nodes() {
  static const auto rule = [] {
    std::pair<std::vector<double>, std::vector<double>> r;
    gauss_legendre(kPanelPoints, r.first, r.second);
    return r;
  }();
  return rule.first;
}

const std::vector<double>& panel_weights() {
  static const auto rule = [] {
    std::pair<std::vector<double>, std::vector<double>> r;
    gauss_legendre(kPanelPoints, r.first, r.second);
    return r;
  }();
  return rule.second;
}

// Composite Gauss-Legendre nodes on [lo, hi] with panels no wider than max_panel.
void composite_rule(double lo, double hi, double max_panel, std::vector<double>& x, std::vector<double>& w) {
  x.clear();
  w.clear();
  if (!(hi > lo)) return;
  const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_panel)));
  const double width = (hi - lo) / panels;
  const auto& t = panel_nodes();
  const auto& tw = panel_weights();
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * width;
    for (int i = 0; i < kPanelPoints; ++i) {
      x.push_back(a + 0.5 * width * (t[static_cast<std::size_t>(i)] + 1.0));
      w.push_back(0.5 * width * tw[static_cast<std::size_t>(i)]);
    }
  }
}

GridSpec measurement_grid(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, double sigma) {
  const int d = static_cast<int>(lower.size());
  const int n = d == 1 ? 4096 : d == 2 ? 256 : d == 3 ? 40 : GridSpec::kMinPointsPerAxis;
  GridSpec g;
  for (int j = 0; j < d; ++j) {
    g.lower.push_back(lower(j) - 8.0 * sigma);
    g.upper.push_back(upper(j) + 8.0 * sigma);
    g.counts.push_back(n);
  }
  g.validate();
  return g;
}

void bounding_box(const MixingMeasure& f, Eigen::VectorXd& lower, Eigen::VectorXd& upper) {
  lower = f.atoms.front();
  upper = f.atoms.front();
  for (const auto& z : f.atoms) {
    lower = lower.cwiseMin(z);
    upper = upper.cwiseMax(z);
  }
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double l1_diff(const GridSpec& grid, const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = std::abs(a[i] - b[i]);
  return integrate(grid, diff);
}

// Largest cell width whose modelled error stays within `target`.
double choose_cell_width(double axis_width, double sigma, int k, double target) {
  if (cell_error_model(axis_width, sigma, k) <= target) return axis_width;
  double lo = std::log(1e-4 * sigma);
  double hi = std::log(axis_width);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cell_error_model(std::exp(mid), sigma, k) <= target)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(lo);
}

std::vector<double> cell_edges(double lower, double upper, double width, std::optional<int> fixed_cells) {
  std::vector<double> edges;
  if (fixed_cells) {
    for (int c = 0; c <= *fixed_cells; ++c) edges.push_back(lower + (upper - lower) * c / *fixed_cells);
    return edges;
  }
  const int n = std::max(1, static_cast<int>(std::ceil((upper - lower) / width - 1e-9)));
  for (int c = 0; c < n; ++c) edges.push_back(lower + c * width);
  edges.push_back(upper);
  return edges;
}

int default_points(double epsilon) { return std::max(1, static_cast<int>(std::ceil(std::log(1.0 / epsilon)))); }

void validate_inputs(double sigma, double epsilon, const DiscretizationOptions& options) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("discretize: sigma must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("discretize: eps must lie in (0, 1)");
  if (options.points_per_cell && *options.points_per_cell < 1)
    throw std::invalid_argument("discretize: points_per_cell must be >= 1");
  if (options.cells_per_axis && *options.cells_per_axis < 1)
    throw std::invalid_argument("discretize: cells_per_axis must be >= 1");
}

void fill_scales(DiscretizationResult& r, int d, double sigma, double epsilon) {
  r.sup_scale = epsilon / std::pow(sigma, d);
  r.l1_scale = epsilon * std::sqrt(std::log(1.0 / epsilon));
}

}  // namespace

void gauss_legendre(int points, std::vector<double>& nodes, std::vector<double>& weights) {
  if (points < 1) throw std::invalid_argument("gauss_legendre: points must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
  for (int j = 1; j < points; ++j) {
    const double b = j / std::sqrt(4.0 * j * j - 1.0);
    jacobi(j, j - 1) = b;
    jacobi(j - 1, j) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  nodes.resize(static_cast<std::size_t>(points));
  weights.resize(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()(i);
    weights[static_cast<std::size_t>(i)] = 2.0 * eig.eigenvectors()(0, i) * eig.eigenvectors()(0, i);
  }
  // Enforce the exact symmetry of the rule.
  for (int i = 0; i < points / 2; ++i) {
    const auto a = static_cast<std::size_t>(i);
    const auto b = static_cast<std::size_t>(points - 1 - i);
    const double x = 0.5 * (nodes[b] - nodes[a]);
    const double w = 0.5 * (weights[a] + weights[b]);
    nodes[a] = -x;
    nodes[b] = x;
    weights[a] = weights[b] = w;
  }
  if (points % 2 == 1) nodes[static_cast<std::size_t>(points / 2)] = 0.0;
}

bool gauss_rule(const std::vector<double>& support, const std::vector<double>& mass, int points,
                std::vector<double>& nodes, std::vector<double>& weights) {
  if (support.size() != mass.size() || support.empty()) throw std::invalid_argument("gauss_rule: bad measure");
  double total = 0.0;
  double lo = support.front();
  double hi = support.front();
  for (std::size_t i = 0; i < support.size(); ++i) {
    total += mass[i];
    lo = std::min(lo, support[i]);
    hi = std::max(hi, support[i]);
  }
  if (!(total > 0.0)) return false;
  const double centre = 0.5 * (lo + hi);
  const double half = hi > lo ? 0.5 * (hi - lo) : 1.0;

  const std::size_t m = support.size();
  std::vector<double> u(m);
  for (std::size_t i = 0; i < m; ++i) u[i] = (support[i] - centre) / half;
  std::vector<double> prev(m, 0.0);
  std::vector<double> cur(m, 1.0);
  std::vector<double> alpha(static_cast<std::size_t>(points));
  std::vector<double> beta(static_cast<std::size_t>(points), 0.0);
  double norm_prev = 0.0;
  for (int j = 0; j < points; ++j) {
    double norm = 0.0;
    double first = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      norm += mass[i] * cur[i] * cur[i];
      first += mass[i] * u[i] * cur[i] * cur[i];
    }
    if (!(norm > 1e-26 * total)) return false;
    alpha[static_cast<std::size_t>(j)] = first / norm;
    if (j > 0) beta[static_cast<std::size_t>(j)] = norm / norm_prev;
    for (std::size_t i = 0; i < m; ++i) {
      const double next = (u[i] - alpha[static_cast<std::size_t>(j)]) * cur[i] - beta[static_cast<std::size_t>(j)] * prev[i];
      prev[i] = cur[i];
      cur[i] = next;
    }
    norm_prev = norm;
  }
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
  for (int j = 0; j < points; ++j) {
    jacobi(j, j) = alpha[static_cast<std::size_t>(j)];
    if (j > 0) {
      const double b = std::sqrt(beta[static_cast<std::size_t>(j)]);
      jacobi(j, j - 1) = b;
      jacobi(j - 1, j) = b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  nodes.resize(static_cast<std::size_t>(points));
  weights.resize(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    nodes[static_cast<std::size_t>(i)] = centre + half * eig.eigenvalues()(i);
    weights[static_cast<std::size_t>(i)] = total * eig.eigenvectors()(0, i) * eig.eigenvectors()(0, i);
  }
  return true;
}

MixingMeasure caratheodory_reduce(const MixingMeasure& measure,
                                  const std::vector<std::function<double(const Eigen::VectorXd&)>>& given) {
  if (given.empty()) throw std::invalid_argument("caratheodory_reduce: no functions");
  // Total mass is always one of the preserved integrals.
  std::vector<std::function<double(const Eigen::VectorXd&)>> functions{[](const Eigen::VectorXd&) { return 1.0; }};
  functions.insert(functions.end(), given.begin(), given.end());
  const std::size_t m = functions.size();
  std::vector<Eigen::VectorXd> atoms;
  std::vector<double> w;
  for (std::size_t i = 0; i < measure.size(); ++i) {
    if (measure.weights[i] > 0.0) {
      atoms.push_back(measure.atoms[i]);
      w.push_back(measure.weights[i]);
    }
  }
  const auto drop = [&](std::size_t i) {
    atoms[i] = atoms.back();
    w[i] = w.back();
    atoms.pop_back();
    w.pop_back();
  };
  while (atoms.size() > m) {
    const std::size_t cols = m + 1;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(cols));
    for (std::size_t c = 0; c < cols; ++c)
      for (std::size_t r = 0; r < m; ++r)
        a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = functions[r](atoms[c]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    Eigen::VectorXd v = svd.matrixV().col(static_cast<Eigen::Index>(m));
    if (v.maxCoeff() <= 0.0) v = -v;
    std::size_t arg = cols;
    double step = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double vc = v(static_cast<Eigen::Index>(c));
      if (vc > 0.0 && (arg == cols || w[c] / vc < step)) {
        step = w[c] / vc;
        arg = c;
      }
    }
    for (std::size_t c = 0; c < cols; ++c) w[c] -= step * v(static_cast<Eigen::Index>(c));
    w[arg] = 0.0;
    for (std::size_t c = cols; c-- > 0;)
      if (w[c] <= 0.0) drop(c);
  }
  MixingMeasure out;
  out.atoms = std::move(atoms);
  out.weights = std::move(w);
  out.radius = measure.radius;
  return out;
}

ProductMeasure::ProductMeasure(std::vector<AxisMeasure> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw std::invalid_argument("ProductMeasure: no axes");
  for (const auto& ax : axes_) {
    if (!ax.density) throw std::invalid_argument("ProductMeasure: missing axis density");
    if (!(ax.upper > ax.lower) || !std::isfinite(ax.lower) || !std::isfinite(ax.upper))
      throw std::invalid_argument("ProductMeasure: axis bounds must be finite with upper > lower");
    std::vector<double> x, w;
    composite_rule(ax.lower, ax.upper, (ax.upper - ax.lower) / 64.0, x, w);
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double v = ax.density(x[i]);
      if (v < 0.0 || !std::isfinite(v)) throw std::invalid_argument("ProductMeasure: density must be non-negative");
      total += w[i] * v;
    }
    if (!(total > 0.0)) throw std::invalid_argument("ProductMeasure: axis has zero mass");
    mass_.push_back(total);
  }
}

ProductMeasure ProductMeasure::uniform_box(int dimension, double half_width) {
  if (dimension < 1 || !(half_width > 0.0)) throw std::invalid_argument("uniform_box: invalid arguments");
  std::vector<AxisMeasure> axes(static_cast<std::size_t>(dimension),
                                AxisMeasure{[](double) { return 1.0; }, -half_width, half_width});
  return ProductMeasure(std::move(axes));
}

double ProductMeasure::radius() const {
  double s = 0.0;
  for (const auto& ax : axes_) {
    const double r = std::max(std::abs(ax.lower), std::abs(ax.upper));
    s += r * r;
  }
  return std::sqrt(s);
}

void ProductMeasure::axis_quadrature(int j, double lo, double hi, double max_panel, std::vector<double>& nodes,
                                     std::vector<double>& weights) const {
  const auto& ax = axes_[static_cast<std::size_t>(j)];
  composite_rule(std::max(lo, ax.lower), std::min(hi, ax.upper), max_panel, nodes, weights);
  const double m = mass_[static_cast<std::size_t>(j)];
  for (std::size_t i = 0; i < nodes.size(); ++i) weights[i] *= ax.density(nodes[i]) / m;
}

double ProductMeasure::moment(const std::vector<int>& exponents) const {
  if (exponents.size() != axes_.size()) throw std::invalid_argument("ProductMeasure::moment: dimension mismatch");
  double out = 1.0;
  for (int j = 0; j < dimension(); ++j) {
    const auto& ax = axes_[static_cast<std::size_t>(j)];
    std::vector<double> x, w;
    axis_quadrature(j, ax.lower, ax.upper, (ax.upper - ax.lower) / 64.0, x, w);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], exponents[static_cast<std::size_t>(j)]);
    out *= s;
  }
  return out;
}

double cell_error_model(double width, double sigma, int points) {
  std::vector<double> t, tw;
  gauss_legendre(points, t, tw);
  const int n = 4001;
  const double lo = -0.5 * width - 9.0 * sigma;
  const double h = (width + 18.0 * sigma) / (n - 1);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + i * h;
    const double p = (normal_cdf((x + 0.5 * width) / sigma) - normal_cdf((x - 0.5 * width) / sigma)) / width;
    double q = 0.0;
    for (std::size_t r = 0; r < t.size(); ++r) q += 0.5 * tw[r] * normal_pdf(x - 0.5 * width * t[r], sigma);
    s += std::abs(p - q);
  }
  return s * h;
}

std::size_t support_count_bound(double radius, double sigma, double epsilon, int dimension, double constant) {
  const double base = std::max(radius / sigma, 1.0) * std::log(1.0 / epsilon);
  return static_cast<std::size_t>(std::ceil(constant * std::pow(base, dimension)));
}

DiscretizationResult moment_match_discretize(const ProductMeasure& p0, double sigma, double epsilon,
                                             const DiscretizationOptions& options) {
  validate_inputs(sigma, epsilon, options);
  const int d = p0.dimension();
  const int k = options.points_per_cell.value_or(default_points(epsilon));
  const double target = kCellErrorFraction * epsilon / d;

  DiscretizationResult r;
  r.points_per_cell = k;
  r.moment_order = 2 * k - 2;
  r.support_radius = p0.radius();
  r.atom_bound = support_count_bound(r.support_radius, sigma, epsilon, d);
  fill_scales(r, d, sigma, epsilon);

  // Per-axis lists of (node, weight) over all cells; the product measure tensorizes them.
  std::vector<std::vector<double>> axis_nodes(static_cast<std::size_t>(d));
  std::vector<std::vector<double>> axis_weights(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const auto& ax = p0.axis(j);
    const double width = ax.upper - ax.lower;
    const double cell = options.cells_per_axis ? width / *options.cells_per_axis : choose_cell_width(width, sigma, k, target);
    const auto edges = cell_edges(ax.lower, ax.upper, cell, options.cells_per_axis);
    r.cells_per_axis.push_back(static_cast<int>(edges.size()) - 1);
    r.cell_width = std::max(r.cell_width, cell);
    for (std::size_t c = 0; c + 1 < edges.size(); ++c) {
      std::vector<double> fx, fw;
      p0.axis_quadrature(j, edges[c], edges[c + 1], (edges[c + 1] - edges[c]) / 8.0, fx, fw);
      double cell_mass = 0.0;
      for (double v : fw) cell_mass += v;
      if (!(cell_mass > 0.0)) continue;
      std::vector<double> nodes, weights;
      if (!gauss_rule(fx, fw, k, nodes, weights)) {
        r.fallback = true;
        r.warning = "degenerate moment system on an axis cell; support points copied";
        nodes = fx;
        weights = fw;
      }
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        axis_nodes[static_cast<std::size_t>(j)].push_back(nodes[i]);
        axis_weights[static_cast<std::size_t>(j)].push_back(weights[i]);
      }
    }
  }

  std::size_t total = 1;
  for (const auto& v : axis_nodes) total *= v.size();
  r.measure.atoms.reserve(total);
  r.measure.weights.reserve(total);
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (int j = d - 1; j >= 0; --j) {
      const std::size_t n = axis_nodes[static_cast<std::size_t>(j)].size();
      idx[static_cast<std::size_t>(j)] = rest % n;
      rest /= n;
    }
    Eigen::VectorXd z(d);
    double w = 1.0;
    for (int j = 0; j < d; ++j) {
      z(j) = axis_nodes[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
      w *= axis_weights[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
    }
    r.measure.atoms.push_back(z);
    r.measure.weights.push_back(w);
  }
  double wsum = 0.0;
  for (double w : r.measure.weights) wsum += w;
  for (double& w : r.measure.weights) w /= wsum;
  r.measure.radius = r.support_radius;
  if (r.measure.size() > r.atom_bound) {
    std::ostringstream os;
    os << "atom count " << r.measure.size() << " exceeds the support-count bound " << r.atom_bound;
    r.warning = r.warning.empty() ? os.str() : r.warning + "; " + os.str();
  }

  if (options.measure_errors) {
    Eigen::VectorXd lower(d), upper(d);
    for (int j = 0; j < d; ++j) {
      lower(j) = p0.axis(j).lower;
      upper(j) = p0.axis(j).upper;
    }
    const GridSpec grid = measurement_grid(lower, upper, sigma);
    std::vector<std::vector<double>> factors(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      const auto& ax = p0.axis(j);
      std::vector<double> fx, fw;
      p0.axis_quadrature(j, ax.lower, ax.upper, 0.25 * sigma, fx, fw);
      auto& out = factors[static_cast<std::size_t>(j)];
      out.assign(static_cast<std::size_t>(grid.counts[static_cast<std::size_t>(j)]), 0.0);
      for (int i = 0; i < grid.counts[static_cast<std::size_t>(j)]; ++i) {
        const double x = grid.coordinate(j, i);
        double s = 0.0;
        for (std::size_t q = 0; q < fx.size(); ++q) s += fw[q] * normal_pdf(x - fx[q], sigma);
        out[static_cast<std::size_t>(i)] = s;
      }
    }
    std::vector<double> p(grid.size(), 0.0);
    accumulate_separable(grid, 1.0, factors, p);
    const auto q = location_mixture_on_grid(grid, r.measure, sigma);
    r.sup_error = max_abs_diff(p, q);
    r.l1_error = l1_diff(grid, p, q);
  }
  return r;
}

DiscretizationResult moment_match_discretize(const MixingMeasure& p0, double sigma, double epsilon,
                                             const DiscretizationOptions& options) {
  validate_inputs(sigma, epsilon, options);
  p0.validate();
  if (p0.size() == 0) throw std::invalid_argument("discretize: empty measure");
  const int d = p0.dimension();
  const int k = options.points_per_cell.value_or(default_points(epsilon));

  DiscretizationResult r;
  r.points_per_cell = k;
  r.moment_order = 2 * k - 2;
  double radius = 0.0;
  for (const auto& z : p0.atoms) radius = std::max(radius, z.norm());
  r.support_radius = p0.radius.value_or(radius);
  r.atom_bound = support_count_bound(r.support_radius, sigma, epsilon, d);
  fill_scales(r, d, sigma, epsilon);

  if (p0.size() <= r.atom_bound && !options.cells_per_axis) {
    r.measure = p0;
    r.unchanged = true;
    return r;
  }

  Eigen::VectorXd lower, upper;
  bounding_box(p0, lower, upper);
  const double target = kCellErrorFraction * epsilon / d;
  std::vector<std::vector<double>> edges(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    double lo = lower(j);
    double hi = upper(j);
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double width = hi - lo;
    const double cell = options.cells_per_axis ? width / *options.cells_per_axis : choose_cell_width(width, sigma, k, target);
    edges[static_cast<std::size_t>(j)] = cell_edges(lo, hi, cell, options.cells_per_axis);
    r.cells_per_axis.push_back(static_cast<int>(edges[static_cast<std::size_t>(j)].size()) - 1);
    r.cell_width = std::max(r.cell_width, cell);
  }

  // Group atoms by cell.
  std::vector<std::size_t> stride(static_cast<std::size_t>(d), 1);
  std::size_t cells = 1;
  for (int j = d - 1; j >= 0; --j) {
    stride[static_cast<std::size_t>(j)] = cells;
    cells *= static_cast<std::size_t>(r.cells_per_axis[static_cast<std::size_t>(j)]);
  }
  std::vector<MixingMeasure> groups(cells);
  for (std::size_t i = 0; i < p0.size(); ++i) {
    std::size_t flat = 0;
    for (int j = 0; j < d; ++j) {
      const auto& e = edges[static_cast<std::size_t>(j)];
      auto it = std::upper_bound(e.begin() + 1, e.end() - 1, p0.atoms[i](j));
      flat += static_cast<std::size_t>(it - (e.begin() + 1)) * stride[static_cast<std::size_t>(j)];
    }
    groups[flat].atoms.push_back(p0.atoms[i]);
    groups[flat].weights.push_back(p0.weights[i]);
  }

  const std::vector<MultiIndex> exponents = enumerate_dominated(MultiIndex(std::vector<int>(static_cast<std::size_t>(d), 2 * k - 2)));
  for (std::size_t c = 0; c < cells; ++c) {
    auto& g = groups[c];
    if (g.size() == 0) continue;
    Eigen::VectorXd centre(d), half(d);
    std::size_t rest = c;
    for (int j = 0; j < d; ++j) {
      const auto& e = edges[static_cast<std::size_t>(j)];
      const std::size_t ij = rest / stride[static_cast<std::size_t>(j)];
      rest %= stride[static_cast<std::size_t>(j)];
      centre(j) = 0.5 * (e[ij] + e[ij + 1]);
      half(j) = 0.5 * (e[ij + 1] - e[ij]);
    }
    std::vector<std::function<double(const Eigen::VectorXd&)>> fns;
    for (const auto& m : exponents) {
      if (m.order() == 0) continue;  // mass is preserved by the reduction itself
      fns.push_back([m, centre, half](const Eigen::VectorXd& z) {
        double v = 1.0;
        for (int j = 0; j < m.dimension(); ++j) v *= std::pow((z(j) - centre(j)) / half(j), m[j]);
        return v;
      });
    }
    const auto reduced = g.size() > fns.size() + 1 ? caratheodory_reduce(g, fns) : g;
    for (std::size_t i = 0; i < reduced.size(); ++i) {
      r.measure.atoms.push_back(reduced.atoms[i]);
      r.measure.weights.push_back(reduced.weights[i]);
    }
  }
  double wsum = 0.0;
  for (double w : r.measure.weights) wsum += w;
  for (double& w : r.measure.weights) w /= wsum;
  r.measure.radius = p0.radius;
  if (r.measure.size() > r.atom_bound) {
    std::ostringstream os;
    os << "atom count " << r.measure.size() << " exceeds the support-count bound " << r.atom_bound;
    r.warning = os.str();
  }

  if (options.measure_errors) {
    const GridSpec grid = measurement_grid(lower, upper, sigma);
    const auto p = location_mixture_on_grid(grid, p0, sigma);
    const auto q = location_mixture_on_grid(grid, r.measure, sigma);
    r.sup_error = max_abs_diff(p, q);
    r.l1_error = l1_diff(grid, p, q);
  }
  return r;
}

Json DiscretizationResult::to_json() const {
  return Json{{"measure", Json::parse(measure.to_json())},
              {"points_per_cell", points_per_cell},
              {"moment_order", moment_order},
              {"cells_per_axis", cells_per_axis},
              {"cell_width", cell_width},
              {"support_radius", support_radius},
              {"atom_count", measure.size()},
              {"atom_bound", atom_bound},
              {"support_constant", support_constant},
              {"unchanged", unchanged},
              {"fallback", fallback},
              {"warning", warning},
              {"sup_error", sup_error},
              {"l1_error", l1_error},
              {"sup_scale", sup_scale},
              {"l1_scale", l1_scale}};
}

SnapResult snap_to_grid(const MixingMeasure& f, double sigma, double epsilon, double radius) {
  if (!(sigma > 0.0) || !(epsilon > 0.0 && epsilon < 1.0) || !(radius > 0.0))
    throw std::invalid_argument("snap_to_grid: sigma, radius must be positive and eps in (0, 1)");
  f.validate();
  SnapResult r;
  r.mesh = sigma * epsilon;
  r.max_index = static_cast<int>(std::ceil(radius / r.mesh)) - 1;
  r.measure = f;
  for (auto& z : r.measure.atoms) {
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      const double n = std::clamp(std::round(z(j) / r.mesh), -static_cast<double>(r.max_index),
                                  static_cast<double>(r.max_index));
      z(j) = n * r.mesh;
    }
  }
  const int d = f.dimension();
  r.sup_scale = epsilon * epsilon / std::pow(sigma, d);
  r.l1_scale = epsilon;
  if (f.size() > 0) {
    Eigen::VectorXd lower, upper, lo2, hi2;
    bounding_box(f, lower, upper);
    bounding_box(r.measure, lo2, hi2);
    const GridSpec grid = measurement_grid(lower.cwiseMin(lo2), upper.cwiseMax(hi2), sigma);
    const auto p = location_mixture_on_grid(grid, f, sigma);
    const auto q = location_mixture_on_grid(grid, r.measure, sigma);
    r.sup_increment = max_abs_diff(p, q);
    r.l1_increment = l1_diff(grid, p, q);
  }
  return r;
}

Json SnapResult::to_json() const {
  return Json{{"measure", Json::parse(measure.to_json())},
              {"mesh", mesh},
              {"max_index", max_index},
              {"sup_increment", sup_increment},
              {"l1_increment", l1_increment},
              {"sup_scale", sup_scale},
              {"l1_scale", l1_scale}};
}

Partition::Partition(PartitionCell remainder, std::vector<PartitionCell> cells)
    : remainder_(std::move(remainder)), cells_(std::move(cells)) {
  for (const auto& c : cells_) {
    if (!c.contains) throw std::invalid_argument("Partition: cell without membership oracle");
    if (!c.contains(c.representative)) throw std::invalid_argument("Partition: representative outside its cell");
    if (!std::isfinite(c.diameter)) throw std::invalid_argument("Partition: cells V_1..V_N need finite diameters");
  }
}

Partition Partition::boxes(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, const std::vector<int>& counts) {
  const auto d = lower.size();
  if (upper.size() != d || counts.size() != static_cast<std::size_t>(d))
    throw std::invalid_argument("Partition::boxes: dimension mismatch");
  std::size_t total = 1;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (counts[static_cast<std::size_t>(j)] < 1 || !(upper(j) > lower(j)))
      throw std::invalid_argument("Partition::boxes: invalid box");
    total *= static_cast<std::size_t>(counts[static_cast<std::size_t>(j)]);
  }
  const Eigen::VectorXd step = (upper - lower).cwiseQuotient(
      Eigen::Map<const Eigen::VectorXi>(counts.data(), d).cast<double>());
  std::vector<PartitionCell> cells;
  cells.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    Eigen::VectorXd lo(d), hi(d);
    Eigen::VectorXi last(d);
    for (Eigen::Index j = d - 1; j >= 0; --j) {
      const auto n = static_cast<std::size_t>(counts[static_cast<std::size_t>(j)]);
      const auto i = static_cast<double>(rest % n);
      last(j) = (rest % n == n - 1) ? 1 : 0;
      rest /= n;
      lo(j) = lower(j) + i * step(j);
      hi(j) = lower(j) + (i + 1.0) * step(j);
    }
    PartitionCell cell;
    cell.contains = [lo, hi, last](const Eigen::VectorXd& z) {
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        if (z(j) < lo(j)) return false;
        if (last(j) ? z(j) > hi(j) : z(j) >= hi(j)) return false;
      }
      return true;
    };
    cell.representative = 0.5 * (lo + hi);
    cell.diameter = step.norm();
    cells.push_back(std::move(cell));
  }
  PartitionCell remainder;
  remainder.contains = [lower, upper](const Eigen::VectorXd& z) {
    for (Eigen::Index j = 0; j < z.size(); ++j)
      if (z(j) < lower(j) || z(j) > upper(j)) return true;
    return false;
  };
  remainder.diameter = std::numeric_limits<double>::infinity();
  return Partition(std::move(remainder), std::move(cells));
}

std::size_t Partition::locate(const Eigen::VectorXd& z) const {
  for (std::size_t j = 0; j < cells_.size(); ++j)
    if (cells_[j].contains(z)) return j + 1;
  if (remainder_.contains && remainder_.contains(z)) return 0;
  std::ostringstream os;
  os << "point (" << z.transpose() << ") lies in no partition cell";
  throw PartitionCoverageError(os.str());
}

Json PartitionBoundReport::to_json() const {
  return Json{{"sup_distance", sup_distance}, {"l1_distance", l1_distance}, {"max_diameter", max_diameter},
              {"mass_mismatch", mass_mismatch}, {"sup_bound", sup_bound},     {"l1_bound", l1_bound},
              {"sup_constant", sup_constant}, {"l1_constant", l1_constant}};
}

PartitionBoundReport partition_perturbation_bound(const MixingMeasure& f, const MixingMeasure& f_prime,
                                                  const Partition& partition, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("partition_perturbation_bound: sigma must be positive");
  f.validate();
  f_prime.validate();
  if (f.dimension() != f_prime.dimension()) throw std::invalid_argument("partition_perturbation_bound: dimension mismatch");
  const int d = f.dimension();
  std::vector<double> p(partition.size(), 0.0);
  std::vector<double> fv(partition.size(), 0.0);
  for (std::size_t i = 0; i < f_prime.size(); ++i) {
    const auto& z = f_prime.atoms[i];
    const std::size_t j = partition.locate(z);
    if (j == 0) throw std::invalid_argument("partition_perturbation_bound: an atom of F' lies in V_0");
    const auto& rep = partition.cell(j).representative;
    if ((z - rep).norm() > 1e-9 * (1.0 + rep.norm()))
      throw std::invalid_argument("partition_perturbation_bound: atoms of F' must be the cell representatives");
    p[j] += f_prime.weights[i];
  }
  for (std::size_t i = 0; i < f.size(); ++i) fv[partition.locate(f.atoms[i])] += f.weights[i];

  PartitionBoundReport r;
  for (std::size_t j = 1; j < partition.size(); ++j) {
    r.max_diameter = std::max(r.max_diameter, partition.cell(j).diameter);
    r.mass_mismatch += std::abs(fv[j] - p[j]);
  }
  r.sup_bound = r.max_diameter / std::pow(sigma, d + 1) + r.mass_mismatch / std::pow(sigma, d);
  r.l1_bound = r.max_diameter / sigma + r.mass_mismatch;

  Eigen::VectorXd lower, upper, lo2, hi2;
  bounding_box(f, lower, upper);
  bounding_box(f_prime, lo2, hi2);
  const GridSpec grid = measurement_grid(lower.cwiseMin(lo2), upper.cwiseMax(hi2), sigma);
  const auto a = location_mixture_on_grid(grid, f, sigma);
  const auto b = location_mixture_on_grid(grid, f_prime, sigma);
  r.sup_distance = max_abs_diff(a, b);
  r.l1_distance = l1_diff(grid, a, b);
  r.sup_constant = r.sup_bound > 0.0 ? r.sup_distance / r.sup_bound : 0.0;
  r.l1_constant = r.l1_bound > 0.0 ? r.l1_distance / r.l1_bound : 0.0;
  return r;
}

std::vector<double> location_mixture_on_grid(const GridSpec& grid, const MixingMeasure& f, double sigma) {
  const int d = grid.dimension();
  std::vector<double> out(grid.size(), 0.0);
  std::vector<std::vector<double>> factors(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.weights[i] == 0.0) continue;
    for (int j = 0; j < d; ++j) {
      auto& fac = factors[static_cast<std::size_t>(j)];
      fac.resize(static_cast<std::size_t>(grid.counts[static_cast<std::size_t>(j)]));
      for (int t = 0; t < grid.counts[static_cast<std::size_t>(j)]; ++t)
        fac[static_cast<std::size_t>(t)] = normal_pdf(grid.coordinate(j, t) - f.atoms[i](j), sigma);
    }
    accumulate_separable(grid, f.weights[i], factors, out);
  }
  return out;
}

}  // namespace dpmlab
