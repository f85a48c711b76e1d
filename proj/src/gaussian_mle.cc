#include "gausstomo/gaussian_mle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>

#include "gausstomo/errors.h"

namespace gausstomo {
namespace {

struct BinTerm {
  Vector w;
  double n = 0.0;
  double y = 0.0;
};

std::vector<BinTerm> bin_terms(const BinnedStats& stats, int mode_count, SecondMoment moment) {
  if (stats.mode_count != mode_count) {
    throw DimensionError("statistics are for " + std::to_string(stats.mode_count) + " mode(s), covariance for " +
                         std::to_string(mode_count));
  }
  std::vector<BinTerm> terms;
  terms.reserve(stats.bins.size());
  for (const auto& b : stats.bins) {
    terms.push_back({ProjectionVector::for_setting(b.setting, mode_count).entries(), static_cast<double>(b.count),
                     moment == SecondMoment::kCentered ? b.centered_sum_sq : b.sum_sq});
  }
  return terms;
}

double bin_variance(const Matrix& g, const Vector& w, double noise) {
  const double v = w.dot(g * w) + noise;
  if (!(v > 0.0)) {
    throw DomainError("non-positive projected variance " + std::to_string(v));
  }
  return v;
}

int parameter_count(int dim) { return dim * (dim + 1) / 2; }

Vector to_parameters(const Matrix& g) {
  const int dim = static_cast<int>(g.rows());
  Vector p(parameter_count(dim));
  int k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) p(k++) = g(i, j);
  return p;
}

Matrix from_parameters(const Vector& p, int dim) {
  Matrix g(dim, dim);
  int k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      g(i, j) = p(k);
      g(j, i) = p(k);
      ++k;
    }
  return g;
}

// Row of the linear map G -> w^T G w in parameter coordinates.
Vector design_row(const Vector& w) {
  const int dim = static_cast<int>(w.size());
  Vector row(parameter_count(dim));
  int k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) row(k++) = (i == j ? 1.0 : 2.0) * w(i) * w(j);
  return row;
}

Matrix design_matrix(const BinnedStats& stats) {
  const int dim = 2 * stats.mode_count;
  Matrix a(static_cast<Eigen::Index>(stats.bins.size()), parameter_count(dim));
  for (std::size_t h = 0; h < stats.bins.size(); ++h) {
    a.row(static_cast<Eigen::Index>(h)) =
        design_row(ProjectionVector::for_setting(stats.bins[h].setting, stats.mode_count).entries()).transpose();
  }
  return a;
}

// Removes from `g` its component along `nulls` relative to `anchor`.
Matrix pin_null_directions(const Matrix& g, const Matrix& anchor, const std::vector<Vector>& nulls) {
  if (nulls.empty()) return g;
  Vector p = to_parameters(g);
  const Vector p0 = to_parameters(anchor);
  for (const auto& n : nulls) p -= (p - p0).dot(n) * n;
  return from_parameters(p, static_cast<int>(g.rows()));
}

// Null directions after checking that only the structurally unobservable
// cross term is missing; anything else is an ill-posed setting list.
std::vector<Vector> admissible_null_directions(const BinnedStats& stats) {
  const Identifiability id = analyze_settings(stats);
  if (id.complete()) return {};
  const int dim = 2 * stats.mode_count;
  const bool only_cross = stats.mode_count == 2 && id.null_directions.size() == 1 &&
                          std::abs(std::abs(id.null_directions.front().dot(unobservable_cross_direction())) - 1.0) < 1e-8;
  if (only_cross) return id.null_directions;

  std::ostringstream msg;
  msg << "settings determine only " << id.rank << " of " << id.parameter_count
      << " covariance parameters; missing directions:";
  for (const auto& n : id.null_directions) msg << " [" << describe_direction(n, dim) << "]";
  throw IllPosedError(msg.str());
}

double mean_log_density(const Matrix& g, const std::vector<BinTerm>& terms, double noise) {
  double total = 0.0;
  double count = 0.0;
  for (const auto& t : terms) {
    const double v = bin_variance(g, t.w, noise);
    total += -0.5 * t.n * std::log(2.0 * std::numbers::pi * v) - t.y / (2.0 * v);
    count += t.n;
  }
  return total / count;
}

}  // namespace

double log_likelihood(const CovarianceMatrix& g, const BinnedStats& stats, double eta, SecondMoment moment) {
  const double noise = efficiency_noise_variance(eta);
  double total = 0.0;
  for (const auto& t : bin_terms(stats, g.mode_count(), moment)) {
    const double v = bin_variance(g.entries(), t.w, noise);
    total += -0.5 * t.n * std::log(v) - t.y / (2.0 * v);
  }
  return total;
}

ExtremalOperators build_extremal_operators(const CovarianceMatrix& g, const BinnedStats& stats, double eta,
                                           SecondMoment moment) {
  const double noise = efficiency_noise_variance(eta);
  ExtremalOperators ops{Matrix::Zero(g.dim(), g.dim()), Matrix::Zero(g.dim(), g.dim())};
  for (const auto& t : bin_terms(stats, g.mode_count(), moment)) {
    const double v = bin_variance(g.entries(), t.w, noise);
    const Matrix ww = t.w * t.w.transpose();
    ops.d += (t.n / v) * ww;
    ops.r += (t.y / (v * v)) * ww;
  }
  return ops;
}

Matrix build_D(const CovarianceMatrix& g, const BinnedStats& stats, double eta) {
  return build_extremal_operators(g, stats, eta).d;
}

Matrix build_R(const CovarianceMatrix& g, const BinnedStats& stats, double eta, SecondMoment moment) {
  return build_extremal_operators(g, stats, eta, moment).r;
}

Matrix log_likelihood_gradient(const CovarianceMatrix& g, const BinnedStats& stats, double eta, SecondMoment moment) {
  const auto ops = build_extremal_operators(g, stats, eta, moment);
  return 0.5 * (ops.r - ops.d);
}

double extremal_residual(const CovarianceMatrix& g, const BinnedStats& stats, double eta, SecondMoment moment) {
  const auto ops = build_extremal_operators(g, stats, eta, moment);
  const Matrix dg = ops.d * g.entries();
  return (ops.r * g.entries() - dg).norm() / dg.norm();
}

namespace {

Matrix apply_iteration(const ExtremalOperators& ops, const Matrix& g) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(ops.d);
  const Vector& ev = solver.eigenvalues();
  if (!(ev.minCoeff() > 1e-12 * std::max(1.0, ev.maxCoeff()))) {
    std::ostringstream msg;
    msg << "extremal operator D is singular; deficient directions:";
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
      if (ev(k) <= 1e-12 * std::max(1.0, ev.maxCoeff())) msg << " (" << solver.eigenvectors().col(k).transpose() << ")";
    }
    throw IllPosedError(msg.str());
  }
  const Matrix d_inv_r = solver.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                         solver.eigenvectors().transpose() * ops.r;
  const Matrix next = d_inv_r * g * d_inv_r.transpose();
  return 0.5 * (next + next.transpose());
}

}  // namespace

CovarianceMatrix iterate_once(const CovarianceMatrix& g, const BinnedStats& stats, double eta, SecondMoment moment) {
  return CovarianceMatrix(apply_iteration(build_extremal_operators(g, stats, eta, moment), g.entries()));
}

Identifiability analyze_settings(const BinnedStats& stats) {
  const int dim = 2 * stats.mode_count;
  Identifiability id;
  id.parameter_count = parameter_count(dim);
  if (stats.bins.empty()) {
    for (int k = 0; k < id.parameter_count; ++k) id.null_directions.push_back(Vector::Unit(id.parameter_count, k));
    return id;
  }
  const Matrix a = design_matrix(stats);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double cutoff = 1e-9 * std::max(1.0, sv(0));
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > cutoff) ++id.rank;
  for (int k = id.rank; k < id.parameter_count; ++k) id.null_directions.push_back(svd.matrixV().col(k));
  return id;
}

Vector unobservable_cross_direction() {
  Matrix g = Matrix::Zero(4, 4);
  g(0, 3) = g(3, 0) = 1.0;
  g(1, 2) = g(2, 1) = -1.0;
  Vector p = to_parameters(g);
  return p / p.norm();
}

std::string describe_direction(const Vector& direction, int dim) {
  std::ostringstream os;
  os.precision(2);
  os << std::fixed;
  int k = 0;
  bool first = true;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j, ++k) {
      if (std::abs(direction(k)) < 1e-6) continue;
      if (!first) os << ' ';
      os << std::showpos << direction(k) << std::noshowpos << "*G[" << i + 1 << ',' << j + 1 << ']';
      first = false;
    }
  return os.str();
}

BinnedStats merge_sparse_bins(const BinnedStats& stats, std::size_t min_count) {
  BinnedStats out = stats;
  if (min_count <= 1) return out;
  out.bins.clear();

  auto same_group = [](const BinRecord& a, const BinRecord& b) {
    return a.setting.bs_angle == b.setting.bs_angle && a.setting.mode == b.setting.mode;
  };
  auto merge = [](const BinRecord& a, const BinRecord& b) {
    BinRecord m;
    m.count = a.count + b.count;
    const double na = static_cast<double>(a.count);
    const double nb = static_cast<double>(b.count);
    m.setting = a.setting;
    m.setting.phase = (na * a.setting.phase + nb * b.setting.phase) / (na + nb);
    m.sum = a.sum + b.sum;
    m.sum_sq = a.sum_sq + b.sum_sq;
    const double delta = a.mean() - b.mean();
    m.centered_sum_sq = a.centered_sum_sq + b.centered_sum_sq + na * nb / (na + nb) * delta * delta;
    return m;
  };

  std::size_t merged = 0;
  std::size_t start = 0;
  while (start < stats.bins.size()) {
    std::size_t end = start;
    while (end < stats.bins.size() && same_group(stats.bins[start], stats.bins[end])) ++end;
    std::vector<BinRecord> group(stats.bins.begin() + start, stats.bins.begin() + end);
    // Fold each sparse bin into its successor; a sparse last bin goes backwards.
    std::vector<BinRecord> kept;
    std::optional<BinRecord> carry;
    for (const auto& b : group) {
      BinRecord cur = carry ? merge(*carry, b) : b;
      if (carry) ++merged;
      carry.reset();
      if (cur.count < min_count) {
        carry = cur;
      } else {
        kept.push_back(cur);
      }
    }
    if (carry) {
      if (kept.empty()) {
        kept.push_back(*carry);
      } else {
        kept.back() = merge(kept.back(), *carry);
        ++merged;
      }
    }
    out.bins.insert(out.bins.end(), kept.begin(), kept.end());
    start = end;
  }
  if (merged > 0) {
    out.warnings.push_back(std::to_string(merged) + " sparse bin(s) with fewer than " + std::to_string(min_count) +
                           " samples merged into neighbours");
  }
  return out;
}

DisplacementVector fit_displacement(const BinnedStats& stats, std::vector<std::string>* warnings) {
  const int dim = 2 * stats.mode_count;
  Matrix normal = Matrix::Zero(dim, dim);
  Vector rhs = Vector::Zero(dim);
  for (const auto& b : stats.bins) {
    const Vector w = ProjectionVector::for_setting(b.setting, stats.mode_count).entries();
    const double n = static_cast<double>(b.count);
    normal += n * w * w.transpose();
    rhs += b.sum * w;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(normal);
  if (solver.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, solver.eigenvalues().maxCoeff())) {
    if (warnings) warnings->push_back("settings do not determine the displacement; reporting zero");
    return DisplacementVector::zero(stats.mode_count);
  }
  return DisplacementVector(normal.ldlt().solve(rhs));
}

namespace {

EstimatorReport run_estimator(const BinnedStats& raw_stats, double eta, const EstimatorConfig& config, int modes) {
  if (config.max_iterations < 1) throw DomainError("max_iterations must be at least 1");
  if (!(config.residual_tolerance > 0.0) || !(config.likelihood_tolerance > 0.0)) {
    throw DomainError("tolerances must be positive");
  }
  if (!(config.damping > 0.0 && config.damping <= 1.0)) throw DomainError("damping must lie in (0, 1]");
  if (raw_stats.bins.empty()) throw DomainError("no binned statistics to estimate from");
  if (raw_stats.mode_count != modes) {
    throw DimensionError("expected " + std::to_string(modes) + "-mode statistics");
  }
  const double noise = efficiency_noise_variance(eta);

  EstimatorReport report;
  const BinnedStats stats = merge_sparse_bins(raw_stats, config.min_bin_count);
  report.warnings = stats.warnings;
  report.sample_count = stats.total_count();

  const std::vector<Vector> nulls = admissible_null_directions(stats);
  const CovarianceMatrix start = config.initial.value_or(CovarianceMatrix::vacuum(modes));
  if (start.mode_count() != modes) throw DimensionError("initial covariance has the wrong mode count");
  if (!nulls.empty()) {
    std::ostringstream msg;
    msg << "direction [" << describe_direction(nulls.front(), 2 * modes)
        << "] is not observable with beam-splitter settings; held at its initial value";
    report.warnings.push_back(msg.str());
  }

  const auto terms = bin_terms(stats, modes, config.moment);
  auto loglik = [&](const Matrix& g) {
    double total = 0.0;
    for (const auto& t : terms) {
      const double v = t.w.dot(g * t.w) + noise;
      if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
      total += -0.5 * t.n * std::log(v) - t.y / (2.0 * v);
    }
    return total;
  };
  auto operators = [&](const Matrix& g) {
    ExtremalOperators ops{Matrix::Zero(2 * modes, 2 * modes), Matrix::Zero(2 * modes, 2 * modes)};
    for (const auto& t : terms) {
      const double v = bin_variance(g, t.w, noise);
      const Matrix ww = t.w * t.w.transpose();
      ops.d += (t.n / v) * ww;
      ops.r += (t.y / (v * v)) * ww;
    }
    return ops;
  };
  auto residual_of = [](const ExtremalOperators& ops, const Matrix& g) {
    const Matrix dg = ops.d * g;
    return (ops.r * g - dg).norm() / dg.norm();
  };

  Matrix g = start.entries();
  double current = loglik(g);
  report.log_likelihood_trace.push_back(current);
  ExtremalOperators ops = operators(g);
  double residual = residual_of(ops, g);

  int it = 0;
  while (residual > config.residual_tolerance && it < config.max_iterations) {
    ++it;
    Matrix proposal = pin_null_directions(apply_iteration(ops, g), start.entries(), nulls);
    double next = loglik(proposal);
    const double slack = config.likelihood_tolerance * std::max(1.0, std::abs(current));
    // The full step overshoots along well-determined directions and can lock
    // into a period-2 orbit of equal likelihood, so a step that fails to gain
    // is also retried damped; the damped step is kept when it does better.
    if (!(next > current + slack)) {
      const bool full_ok = next >= current - slack;
      bool accepted = false;
      double alpha = config.damping;
      for (int halving = 0; halving <= 10; ++halving, alpha *= 0.5) {
        const Matrix damped = (1.0 - alpha) * g + alpha * proposal;
        const double value = loglik(damped);
        if (value >= current - slack && (!full_ok || value > next)) {
          proposal = damped;
          next = value;
          accepted = true;
          break;
        }
      }
      accepted = accepted || full_ok;
      if (!accepted) {
        report.warnings.push_back("likelihood could not be increased after damping; stopped at iteration " +
                                  std::to_string(it));
        break;
      }
    }
    g = proposal;
    current = next;
    report.log_likelihood_trace.push_back(current);
    ops = operators(g);
    residual = residual_of(ops, g);
  }

  report.iterations = it;
  report.final_residual = residual;
  report.converged = residual <= config.residual_tolerance;
  if (!report.converged) {
    report.warnings.push_back("no convergence after " + std::to_string(it) + " iterations (residual " +
                              std::to_string(residual) + ")");
  }

  CovarianceMatrix estimate(g);
  report.physicality = check_physical(estimate);
  if (!report.physicality.physical) {
    report.warnings.push_back("estimate violates the uncertainty relation (min symplectic eigenvalue " +
                              std::to_string(report.physicality.min_symplectic_eigenvalue) + ")");
    if (config.project_unphysical) {
      estimate = floor_symplectic_eigenvalues(estimate);
      report.physicality = check_physical(estimate);
      report.warnings.push_back("estimate projected onto the physical set");
    }
  }
  report.estimate = estimate;
  report.displacement = fit_displacement(stats, &report.warnings);
  report.mean_log_density = mean_log_density(estimate.entries(), terms, noise);
  return report;
}

}  // namespace

EstimatorReport estimate(const BinnedStats& stats, double eta, const EstimatorConfig& config) {
  return run_estimator(stats, eta, config, 1);
}

EstimatorReport estimate_two_mode(const BinnedStats& stats, double eta, const EstimatorConfig& config) {
  return run_estimator(stats, eta, config, 2);
}

CovarianceMatrix oracle_lsq_fit(const BinnedStats& stats, double eta, SecondMoment moment) {
  if (stats.bins.empty()) throw DomainError("no binned statistics to fit");
  const double noise = efficiency_noise_variance(eta);
  admissible_null_directions(stats);

  const Matrix a = design_matrix(stats);
  Vector rhs(a.rows());
  for (std::size_t h = 0; h < stats.bins.size(); ++h) {
    const auto& b = stats.bins[h];
    const double y = moment == SecondMoment::kCentered ? b.centered_sum_sq : b.sum_sq;
    rhs(static_cast<Eigen::Index>(h)) = y / static_cast<double>(b.count) - noise;
  }
  // Minimum-norm solution: any unobservable direction comes out as zero.
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
  cod.setThreshold(1e-9);
  return CovarianceMatrix(from_parameters(cod.solve(rhs), 2 * stats.mode_count));
}

}  // namespace gausstomo
