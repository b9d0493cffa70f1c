#include "dpmlab/posterior_gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "dpmlab/divergences.hpp"
#include "dpmlab/stats.hpp"

namespace dpmlab {

namespace {

constexpr int kMaxJitterRetries = 20;

Json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

GridSpec default_grid(const Eigen::MatrixXd& data, const PriorSpec& prior) {
  const int d = prior.dimension();
  GridSpec g;
  for (int j = 0; j < d; ++j) {
    const double base_sd = std::sqrt(prior.base_covariance(j, j));
    double lo = prior.base_mean(j) - 5.0 * base_sd;
    double hi = prior.base_mean(j) + 5.0 * base_sd;
    if (data.rows() > 0) {
      const auto col = data.col(j);
      const double m = col.mean();
      const double sd = std::sqrt((col.array() - m).square().sum() / std::max<Eigen::Index>(data.rows() - 1, 1));
      lo = std::min(lo, col.minCoeff() - 6.0 * sd);
      hi = std::max(hi, col.maxCoeff() + 6.0 * sd);
    }
    g.lower.push_back(lo);
    g.upper.push_back(hi);
  }
  const int points = d == 1 ? 2048 : d == 2 ? 256 : d == 3 ? 48 : 16;
  g.counts.assign(static_cast<std::size_t>(d), points);
  g.validate();
  return g;
}

// Univariate slice sampler on (0, inf) with stepping out and shrinkage.
template <typename LogDensity>
double slice_sample_positive(const LogDensity& logf, double x0, double width, Rng& rng) {
  const double level = logf(x0) + std::log(draw_uniform(rng));
  double lo = x0 - width * draw_uniform(rng);
  double hi = lo + width;
  for (int i = 0; i < 64 && lo > 0.0 && logf(lo) > level; ++i) lo -= width;
  lo = std::max(lo, 0.0);
  for (int i = 0; i < 64 && logf(hi) > level; ++i) hi += width;
  for (int i = 0; i < 200; ++i) {
    const double x = lo + (hi - lo) * draw_uniform(rng);
    if (x > 0.0 && logf(x) > level) return x;
    (x < x0 ? lo : hi) = x;
  }
  return x0;
}

class Sampler {
 public:
  Sampler(const Eigen::MatrixXd& data, const PriorSpec& prior, int truncation, Rng& rng)
      : x_(data), prior_(prior), rng_(rng), d_(prior.dimension()), h_(truncation) {
    base_precision_ = prior_.base_covariance.inverse();
    base_shift_ = base_precision_ * prior_.base_mean;
    state_.truncation = h_;
    const auto sticks = draw_sticks(h_, prior_.total_mass, rng_);
    state_.sticks = sticks.sticks;
    state_.sticks.back() = 1.0;
    for (int h = 0; h < h_; ++h) state_.atoms.push_back(draw_base_atom(prior_, rng_));
    state_.covariance = draw_covariance(prior_, rng_).covariance.matrix();
    state_.allocations.assign(static_cast<std::size_t>(x_.rows()), 0);
  }

  void sweep() {
    update_allocations();
    update_sticks();
    update_atoms();
    update_covariance();
    ++state_.iteration;
  }

  const GibbsState& state() const { return state_; }
  std::size_t retries() const { return retries_; }

  double holdout_loglik(const Eigen::MatrixXd& y) const {
    const auto cov = CovarianceSpec::from_matrix(state_.covariance);
    const auto w = state_.weights();
    double total = 0.0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      double best = -std::numeric_limits<double>::infinity();
      std::vector<double> terms;
      for (int h = 0; h < h_; ++h) {
        if (w[static_cast<std::size_t>(h)] <= 0.0) continue;
        const double t = std::log(w[static_cast<std::size_t>(h)]) +
                         cov.log_density(y.row(i).transpose() - state_.atoms[static_cast<std::size_t>(h)]);
        terms.push_back(t);
        best = std::max(best, t);
      }
      double s = 0.0;
      for (double t : terms) s += std::exp(t - best);
      total += best + std::log(s);
    }
    return total / static_cast<double>(y.rows());
  }

 private:
  void diverged(const std::string& what) const {
    std::ostringstream os;
    os << "run_gibbs: " << what << " at iteration " << state_.iteration;
    throw GibbsDivergence(os.str(), state_.to_json());
  }

  void update_allocations() {
    const Eigen::Index n = x_.rows();
    if (n == 0) return;
    const Eigen::LLT<Eigen::MatrixXd> llt(state_.covariance);
    const auto l = llt.matrixL();
    const Eigen::MatrixXd y = l.solve(x_.transpose());  // d x n
    Eigen::MatrixXd z(d_, h_);
    for (int h = 0; h < h_; ++h) z.col(h) = state_.atoms[static_cast<std::size_t>(h)];
    const Eigen::MatrixXd w = l.solve(z);
    const auto weights = state_.weights();
    std::vector<double> logw(static_cast<std::size_t>(h_));
    for (int h = 0; h < h_; ++h) {
      const double v = weights[static_cast<std::size_t>(h)];
      logw[static_cast<std::size_t>(h)] = v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
    }
    std::vector<double> p(static_cast<std::size_t>(h_));
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (int h = 0; h < h_; ++h) {
        const double t = logw[static_cast<std::size_t>(h)] - 0.5 * (y.col(i) - w.col(h)).squaredNorm();
        p[static_cast<std::size_t>(h)] = t;
        best = std::max(best, t);
      }
      if (!std::isfinite(best)) diverged("non-finite allocation likelihood");
      double total = 0.0;
      for (double& t : p) {
        t = std::exp(t - best);
        total += t;
      }
      double u = draw_uniform(rng_) * total;
      int pick = h_ - 1;
      for (int h = 0; h < h_; ++h) {
        u -= p[static_cast<std::size_t>(h)];
        if (u < 0.0) {
          pick = h;
          break;
        }
      }
      state_.allocations[static_cast<std::size_t>(i)] = pick;
    }
  }

  void update_sticks() {
    counts_.assign(static_cast<std::size_t>(h_), 0);
    for (int c : state_.allocations) ++counts_[static_cast<std::size_t>(c)];
    long after = static_cast<long>(x_.rows());
    for (int h = 0; h < h_ - 1; ++h) {
      after -= counts_[static_cast<std::size_t>(h)];
      state_.sticks[static_cast<std::size_t>(h)] =
          draw_beta(rng_, 1.0 + counts_[static_cast<std::size_t>(h)], prior_.total_mass + static_cast<double>(after));
    }
    state_.sticks.back() = 1.0;
  }

  void update_atoms() {
    const Eigen::MatrixXd q = state_.covariance.inverse();
    std::vector<Eigen::VectorXd> sums(static_cast<std::size_t>(h_), Eigen::VectorXd::Zero(d_));
    for (Eigen::Index i = 0; i < x_.rows(); ++i)
      sums[static_cast<std::size_t>(state_.allocations[static_cast<std::size_t>(i)])] += x_.row(i).transpose();
    for (int h = 0; h < h_; ++h) {
      const auto k = static_cast<std::size_t>(h);
      const Eigen::MatrixXd precision = base_precision_ + static_cast<double>(counts_[k]) * q;
      const Eigen::LLT<Eigen::MatrixXd> llt(precision);
      const Eigen::VectorXd mean = llt.solve(base_shift_ + q * sums[k]);
      // precision = U^T U with U upper; U^{-1} e has covariance precision^{-1}.
      const Eigen::VectorXd e = draw_standard_normal_vector(rng_, d_);
      state_.atoms[k] = mean + llt.matrixU().solve(e);
    }
  }

  void update_covariance() {
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d_, d_);
    for (Eigen::Index i = 0; i < x_.rows(); ++i) {
      const Eigen::VectorXd r =
          x_.row(i).transpose() - state_.atoms[static_cast<std::size_t>(state_.allocations[static_cast<std::size_t>(i)])];
      scatter.noalias() += r * r.transpose();
    }
    const double n = static_cast<double>(x_.rows());
    Eigen::MatrixXd precision;
    switch (prior_.kind) {
      case CovariancePriorKind::InverseWishart: {
        PriorSpec post = prior_;
        post.dof += n;
        post.scale = prior_.scale + scatter;
        precision = draw_precision(post, rng_);
        break;
      }
      case CovariancePriorKind::InverseGammaDiagonal:
        precision = Eigen::MatrixXd::Zero(d_, d_);
        for (int j = 0; j < d_; ++j)
          precision(j, j) = draw_gamma(rng_, prior_.shape + 0.5 * n, prior_.rate + 0.5 * scatter(j, j));
        break;
      case CovariancePriorKind::SquaredInverseGammaDiagonal:
        precision = Eigen::MatrixXd::Zero(d_, d_);
        for (int j = 0; j < d_; ++j) {
          double g;
          if (x_.rows() == 0) {
            g = draw_gamma(rng_, prior_.shape, prior_.rate);
          } else {
            // 1/sigma_j = g has density g^{shape - 1 + n} exp(-rate g - S_jj g^2 / 2).
            const double a = prior_.shape - 1.0 + n;
            const double b = prior_.rate;
            const double s = scatter(j, j);
            const auto logf = [&](double v) { return a * std::log(v) - b * v - 0.5 * s * v * v; };
            const double g0 = 1.0 / std::sqrt(state_.covariance(j, j));
            const double width = std::max(g0 / std::sqrt(std::max(a, 1.0)), 1e-8);
            g = slice_sample_positive(logf, g0, width, rng_);
          }
          precision(j, j) = g * g;
        }
        break;
    }
    Eigen::MatrixXd cov = precision.inverse();
    cov = 0.5 * (cov + cov.transpose());
    for (int attempt = 0;; ++attempt) {
      try {
        state_.covariance = CovarianceSpec::from_matrix(cov).matrix();
        return;
      } catch (const NotPositiveDefinite&) {
        if (attempt >= kMaxJitterRetries || !cov.allFinite()) diverged("covariance update is not positive definite");
        ++retries_;
        cov += 1e-10 * std::max(cov.trace() / d_, 1e-300) * std::pow(10.0, attempt) * Eigen::MatrixXd::Identity(d_, d_);
      }
    }
  }

  const Eigen::MatrixXd& x_;
  const PriorSpec& prior_;
  Rng& rng_;
  int d_;
  int h_;
  Eigen::MatrixXd base_precision_;
  Eigen::VectorXd base_shift_;
  GibbsState state_;
  std::vector<long> counts_;
  std::size_t retries_ = 0;
};

std::vector<double> draw_density(const PosteriorDraw& draw, const GridSpec& grid) {
  return make_gaussian_mixture(draw.mixing, draw.covariance)->values_on_grid(grid);
}

}  // namespace

std::vector<double> GibbsState::weights() const {
  std::vector<double> w;
  double rest = 1.0;
  for (double v : sticks) {
    w.push_back(v * rest);
    rest *= 1.0 - v;
  }
  return w;
}

Json GibbsState::to_json() const {
  Json atoms_json = Json::array();
  for (const auto& z : atoms) atoms_json.push_back(vector_json(z));
  return Json{{"truncation", truncation},   {"iteration", iteration},    {"sticks", sticks},
              {"atoms", atoms_json},        {"covariance", matrix_json(covariance)},
              {"allocations", allocations}};
}

double PosteriorSummary::mean_density_mass() const { return integrate(grid, mean_density); }

Json PosteriorSummary::to_json() const {
  Json j{{"retained_draws", draws.size()},
         {"mean_density_mass", mean_density_mass()},
         {"covariance_retries", covariance_retries}};
  if (!l1_loss.empty()) {
    j["median_l1_loss"] = quantile(l1_loss, 0.5);
    j["median_hellinger_loss"] = quantile(hellinger_loss, 0.5);
  }
  if (!holdout_loglik.empty()) j["final_holdout_loglik"] = holdout_loglik.back();
  return j;
}

PosteriorSummary run_gibbs(const Eigen::MatrixXd& data, const PriorSpec& prior, const GibbsOptions& options,
                           Rng& rng) {
  prior.validate();
  const int d = prior.dimension();
  const Eigen::MatrixXd x = data.rows() == 0 ? Eigen::MatrixXd(0, d) : data;
  if (x.cols() != d) throw std::invalid_argument("run_gibbs: data dimension does not match the prior");
  if (x.rows() > 0 && x.rows() < 10) throw std::invalid_argument("run_gibbs: need n >= 10 (or n = 0 for the prior)");
  if (!x.allFinite()) throw std::invalid_argument("run_gibbs: data contain non-finite values");
  if (options.truncation < 5) throw std::invalid_argument("run_gibbs: need H >= 5");
  if (options.burn_in < 0 || options.thin < 1 || options.iterations <= options.burn_in)
    throw std::invalid_argument("run_gibbs: need iterations > burn_in >= 0 and thin >= 1");
  const auto retained = static_cast<std::size_t>((options.iterations - options.burn_in + options.thin - 1) / options.thin);
  if (retained < kMinRetainedDraws) throw std::invalid_argument("run_gibbs: fewer than 100 retained draws");
  if (options.holdout && options.holdout->cols() != d)
    throw std::invalid_argument("run_gibbs: holdout dimension does not match the prior");

  PosteriorSummary s;
  s.grid = options.grid ? *options.grid : default_grid(x, prior);
  s.grid.validate();
  if (s.grid.dimension() != d) throw std::invalid_argument("run_gibbs: grid dimension does not match the prior");
  s.mean_density.assign(s.grid.size(), 0.0);
  std::vector<double> truth;
  if (options.truth) {
    if (options.truth->dimension() != d) throw std::invalid_argument("run_gibbs: truth dimension does not match");
    truth = options.truth->values_on_grid(s.grid);
  }
  const Eigen::MatrixXd psi = prior.kind == CovariancePriorKind::InverseWishart ? prior.scale
                                                                                : Eigen::MatrixXd::Identity(d, d);

  Sampler sampler(x, prior, options.truncation, rng);
  for (int it = 0; it < options.iterations; ++it) {
    sampler.sweep();
    const GibbsState& st = sampler.state();
    if (options.holdout) s.holdout_loglik.push_back(sampler.holdout_loglik(*options.holdout));
    if (it < options.burn_in || (it - options.burn_in) % options.thin != 0) continue;

    const auto w = st.weights();
    MixingMeasure m;
    double kept = 0.0;
    for (int h = 0; h < st.truncation; ++h) {
      const double v = w[static_cast<std::size_t>(h)];
      if (v < kPruneWeight) continue;
      m.atoms.push_back(st.atoms[static_cast<std::size_t>(h)]);
      m.weights.push_back(v);
      kept += v;
    }
    for (double& v : m.weights) v /= kept;
    PosteriorDraw draw{std::move(m), CovarianceSpec::from_matrix(st.covariance)};
    const auto dens = draw_density(draw, s.grid);
    for (std::size_t p = 0; p < dens.size(); ++p) s.mean_density[p] += dens[p];
    if (!truth.empty()) {
      s.l1_loss.push_back(l1_on_grid(s.grid, truth, dens));
      s.hellinger_loss.push_back(hellinger_on_grid(s.grid, truth, dens));
    }
    s.first_stick.push_back(st.sticks.front());
    s.precision_trace.push_back((psi * draw.covariance.inverse()).trace());
    s.largest_weight.push_back(*std::max_element(draw.mixing.weights.begin(), draw.mixing.weights.end()));
    s.draws.push_back(std::move(draw));
  }
  for (double& v : s.mean_density) v /= static_cast<double>(s.draws.size());
  s.covariance_retries = sampler.retries();
  s.final_state = sampler.state();
  return s;
}

LossMetric loss_metric_from_string(const std::string& s) {
  if (s == "l1") return LossMetric::L1;
  if (s == "hellinger") return LossMetric::Hellinger;
  throw std::invalid_argument("unknown loss metric: " + s);
}

std::string to_string(LossMetric metric) { return metric == LossMetric::L1 ? "l1" : "hellinger"; }

double posterior_loss_quantile(const PosteriorSummary& summary, const TestDensity& f0, LossMetric metric, double q) {
  if (summary.draws.size() < kMinRetainedDraws)
    throw std::invalid_argument("posterior_loss_quantile: fewer than 100 retained draws");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("posterior_loss_quantile: q must lie in [0, 1]");
  const auto truth = f0.values_on_grid(summary.grid);
  std::vector<double> loss;
  loss.reserve(summary.draws.size());
  for (const auto& draw : summary.draws) {
    const auto dens = draw_density(draw, summary.grid);
    loss.push_back(metric == LossMetric::L1 ? l1_on_grid(summary.grid, truth, dens)
                                            : hellinger_on_grid(summary.grid, truth, dens));
  }
  return quantile(std::move(loss), q);
}

Eigen::MatrixXd read_data_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cell = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (cell.empty() || used != cell.size()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw std::invalid_argument("read_data_csv: non-numeric value on line " + std::to_string(line_no));
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("read_data_csv: ragged row on line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

Eigen::MatrixXd read_data_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_data_csv: cannot open " + path.string());
  return read_data_csv(in);
}

void write_draws_jsonl(const PosteriorSummary& summary, std::ostream& out) {
  for (const auto& draw : summary.draws) {
    Json atoms = Json::array();
    for (const auto& z : draw.mixing.atoms) atoms.push_back(vector_json(z));
    const Json j{{"atoms", atoms}, {"weights", draw.mixing.weights}, {"covariance", matrix_json(draw.covariance.matrix())}};
    out << canonical_json(j) << '\n';
  }
}

}  // namespace dpmlab
