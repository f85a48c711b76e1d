#include "gausstomo/fock_mle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <Eigen/Eigenvalues>

#include "gausstomo/errors.h"

namespace gausstomo {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kProbabilityFloor = 1e-12;
// Composite Gauss-Legendre: 8 nodes on sub-intervals no wider than this.
constexpr double kMaxPanelWidth = 0.25;

void require_dim(int dim) {
  if (dim < 1 || dim > kMaxFockDimension) {
    throw DomainError("Fock dimension must lie in [1, " + std::to_string(kMaxFockDimension) + "]");
  }
}

// Appends composite 8-point Gauss-Legendre nodes/weights on [a, b].
void add_panels(double a, double b, double max_width, std::vector<double>& nodes, std::vector<double>& weights) {
  if (!(b > a)) return;
  using Rule = boost::math::quadrature::gauss<double, 8>;
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / max_width)));
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
      const double x = 0.5 * h * Rule::abscissa()[i];
      const double wt = 0.5 * h * Rule::weights()[i];
      nodes.push_back(mid - x);
      weights.push_back(wt);
      nodes.push_back(mid + x);
      weights.push_back(wt);
    }
  }
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

DensityMatrix::DensityMatrix(const ComplexMatrix& entries) {
  if (entries.rows() != entries.cols() || entries.rows() < 1) {
    throw DimensionError("density matrix must be square and non-empty");
  }
  if (entries.rows() > kMaxFockDimension) throw DimensionError("density matrix dimension exceeds 64");
  if ((entries - entries.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
    throw DomainError("density matrix is not Hermitian");
  }
  entries_ = 0.5 * (entries + entries.adjoint());
  const double trace = entries_.trace().real();
  if (std::abs(trace - 1.0) > 1e-10) {
    throw DomainError("density matrix trace " + std::to_string(trace) + " differs from 1");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(entries_, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -1e-10) {
    throw DomainError("density matrix has a negative eigenvalue");
  }
}

DensityMatrix DensityMatrix::fock(int n, int dim) {
  require_dim(dim);
  if (n < 0 || n >= dim) throw DomainError("Fock level outside the truncated space");
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  m(n, n) = 1.0;
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::thermal(double mean_photons, int dim) {
  require_dim(dim);
  if (!(mean_photons >= 0.0)) throw DomainError("mean photon number must be non-negative");
  const double q = mean_photons / (1.0 + mean_photons);
  Vector p(dim);
  double w = 1.0;
  for (int k = 0; k < dim; ++k, w *= q) p(k) = w;
  p /= p.sum();
  return DensityMatrix(p.cast<Complex>().asDiagonal().toDenseMatrix());
}

Matrix povm_bin_matrix(const QuadratureBin& bin, double eta, int dim) {
  require_dim(dim);
  if (!(bin.upper > bin.lower)) throw DomainError("quadrature bin must have positive width");
  const double noise = efficiency_noise_variance(eta);
  // psi_{dim-1} is negligible beyond its turning point plus a few widths.
  const double reach = std::sqrt(2.0 * dim + 1.0) + 6.0;

  std::vector<double> nodes;
  std::vector<double> weights;
  if (noise == 0.0) {
    add_panels(std::max(bin.lower, -reach), std::min(bin.upper, reach), kMaxPanelWidth, nodes, weights);
  } else {
    const double delta = std::sqrt(noise);
    const double a = std::max(bin.lower - 10.0 * delta, -reach);
    const double b = std::min(bin.upper + 10.0 * delta, reach);
    add_panels(a, b, std::min(kMaxPanelWidth, delta), nodes, weights);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double y = nodes[i];
      const double hi = std::isinf(bin.upper) ? 1.0 : normal_cdf((bin.upper - y) / delta);
      const double lo = std::isinf(bin.lower) ? 0.0 : normal_cdf((bin.lower - y) / delta);
      weights[i] *= hi - lo;
    }
  }

  Matrix psi(static_cast<Eigen::Index>(nodes.size()), dim);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    psi.row(static_cast<Eigen::Index>(i)) = hermite_wavefunctions(dim, nodes[i]).transpose();
  }
  const Eigen::Map<const Vector> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
  Matrix a = psi.transpose() * w.asDiagonal() * psi;
  return 0.5 * (a + a.transpose());
}

ComplexMatrix povm_element(double phase, const QuadratureBin& bin, double eta, int dim) {
  const Matrix base = povm_bin_matrix(bin, eta, dim);
  ComplexMatrix out(dim, dim);
  for (int m = 0; m < dim; ++m)
    for (int n = 0; n < dim; ++n) out(m, n) = std::polar(base(m, n), (m - n) * phase);
  return out;
}

QuadraturePOVM::QuadraturePOVM(std::vector<double> phases, std::vector<QuadratureBin> bins, double eta, int dim,
                               Matrix counts)
    : phases_(std::move(phases)), bins_(std::move(bins)), eta_(eta), dim_(dim), counts_(std::move(counts)) {
  require_dim(dim);
  efficiency_noise_variance(eta);
  if (counts_.rows() != static_cast<Eigen::Index>(phases_.size()) ||
      counts_.cols() != static_cast<Eigen::Index>(bins_.size())) {
    throw DimensionError("count table must be phases x bins");
  }
  if ((counts_.array() < 0.0).any()) throw DomainError("counts must be non-negative");
  base_.reserve(bins_.size());
  for (const auto& b : bins_) base_.push_back(povm_bin_matrix(b, eta_, dim_));
}

ComplexMatrix QuadraturePOVM::element(std::size_t phase_index, std::size_t bin_index) const {
  const Matrix& base = base_.at(bin_index);
  const double phase = phases_.at(phase_index);
  ComplexMatrix out(dim_, dim_);
  for (int m = 0; m < dim_; ++m)
    for (int n = 0; n < dim_; ++n) out(m, n) = std::polar(base(m, n), (m - n) * phase);
  return out;
}

QuadraturePOVM build_povm(const HomodyneDataset& dataset, const PovmConfig& config) {
  if (dataset.mode_count() != 1) throw DimensionError("Fock-space tomography needs single-mode data");
  if (dataset.empty()) throw DomainError("cannot build a POVM from an empty dataset");
  if (config.phase_bins < 1 || config.quadrature_bins < 2) throw DomainError("need >= 1 phase and >= 2 quadrature bins");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : dataset.samples()) {
    lo = std::min(lo, s.value);
    hi = std::max(hi, s.value);
  }
  if (!(hi > lo)) throw DomainError("all quadrature values are identical");
  const int q = config.quadrature_bins;
  const double width = (hi - lo) / q;

  std::vector<QuadratureBin> bins(static_cast<std::size_t>(q));
  for (int k = 0; k < q; ++k) {
    bins[k] = {lo + k * width, lo + (k + 1) * width};
  }
  bins.front().lower = -std::numeric_limits<double>::infinity();
  bins.back().upper = std::numeric_limits<double>::infinity();

  std::vector<double> phases(static_cast<std::size_t>(config.phase_bins));
  for (int k = 0; k < config.phase_bins; ++k) phases[k] = kTwoPi * (k + 0.5) / config.phase_bins;

  Matrix counts = Matrix::Zero(config.phase_bins, q);
  for (const auto& s : dataset.samples()) {
    const int pi = std::clamp(static_cast<int>(std::floor(s.phase / kTwoPi * config.phase_bins)), 0,
                              config.phase_bins - 1);
    const int qi = std::clamp(static_cast<int>(std::floor((s.value - lo) / width)), 0, q - 1);
    counts(pi, qi) += 1.0;
  }
  const double eta = config.include_efficiency ? dataset.efficiency() : 1.0;
  return QuadraturePOVM(std::move(phases), std::move(bins), eta, config.dim, std::move(counts));
}

namespace {

// Evaluates cell probabilities and builds R for the phase-factorized POVM:
// Pi_{kb} = E_k o A_b with E_k(m, n) = exp(i (m - n) theta_k).
class PovmEvaluator {
 public:
  explicit PovmEvaluator(const QuadraturePOVM& povm) : povm_(povm), dim_(povm.dim()) {
    const auto bins = static_cast<Eigen::Index>(povm.bins().size());
    stacked_.resize(static_cast<Eigen::Index>(dim_) * dim_, bins);
    for (Eigen::Index b = 0; b < bins; ++b) {
      stacked_.col(b) = povm.bin_matrix(static_cast<std::size_t>(b)).reshaped();
    }
    for (double theta : povm.phases()) {
      ComplexMatrix e(dim_, dim_);
      for (int m = 0; m < dim_; ++m)
        for (int n = 0; n < dim_; ++n) e(m, n) = std::polar(1.0, (m - n) * theta);
      phase_factors_.push_back(std::move(e));
    }
    const double total = povm.counts().sum();
    if (!(total > 0.0)) throw DomainError("all POVM counts are zero");
    freq_ = povm.counts() / total;
  }

  const Matrix& frequencies() const { return freq_; }

  // Tr[rho Pi_kb] for all cells (phases x bins).
  Matrix probabilities(const ComplexMatrix& rho) const {
    Matrix p(static_cast<Eigen::Index>(phase_factors_.size()), stacked_.cols());
    for (std::size_t k = 0; k < phase_factors_.size(); ++k) {
      // Tr[rho (E o A)] = sum_mn Re(rho_mn conj(E_mn)) A_mn for symmetric A.
      const Matrix rotated = (rho.array() * phase_factors_[k].array().conjugate()).real().matrix();
      p.row(static_cast<Eigen::Index>(k)) = (stacked_.transpose() * rotated.reshaped()).transpose();
    }
    return p;
  }

  ComplexMatrix r_operator(const Matrix& coefficients) const {
    ComplexMatrix r = ComplexMatrix::Zero(dim_, dim_);
    for (std::size_t k = 0; k < phase_factors_.size(); ++k) {
      const Vector combined = stacked_ * coefficients.row(static_cast<Eigen::Index>(k)).transpose();
      const Matrix b = combined.reshaped(dim_, dim_);
      r.array() += phase_factors_[k].array() * b.array().cast<Complex>();
    }
    return r;
  }

  double log_likelihood(const Matrix& p, bool* floored) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < p.cols(); ++j) {
        const double f = freq_(i, j);
        if (f == 0.0) continue;
        double v = p(i, j);
        if (v < kProbabilityFloor) {
          v = kProbabilityFloor;
          if (floored) *floored = true;
        }
        total += f * std::log(v);
      }
    return total;
  }

  Matrix coefficients(const Matrix& p) const {
    Matrix c = Matrix::Zero(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < p.cols(); ++j)
        if (freq_(i, j) > 0.0) c(i, j) = freq_(i, j) / std::max(p(i, j), kProbabilityFloor);
    return c;
  }

 private:
  const QuadraturePOVM& povm_;
  int dim_;
  Matrix stacked_;  // dim^2 x bins, column b = vec(A_b)
  std::vector<ComplexMatrix> phase_factors_;
  Matrix freq_;
};

ComplexMatrix normalized_sandwich(const ComplexMatrix& left, const ComplexMatrix& rho) {
  ComplexMatrix next = left * rho * left.adjoint();
  next = 0.5 * (next + next.adjoint());
  return next / next.trace().real();
}

}  // namespace

double fock_log_likelihood(const DensityMatrix& rho, const QuadraturePOVM& povm) {
  if (rho.dim() != povm.dim()) throw DimensionError("state and POVM dimensions differ");
  PovmEvaluator eval(povm);
  return eval.log_likelihood(eval.probabilities(rho.entries()), nullptr);
}

FockReport ml_reconstruct(const QuadraturePOVM& povm, const FockConfig& config) {
  if (config.max_iterations < 1 || !(config.tolerance > 0.0)) throw DomainError("invalid Fock iteration config");
  const int dim = povm.dim();
  PovmEvaluator eval(povm);

  ComplexMatrix rho = ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim);
  bool floored = false;
  Matrix p = eval.probabilities(rho);
  double current = eval.log_likelihood(p, &floored);

  FockReport report;
  report.log_likelihood_trace.push_back(current);
  const ComplexMatrix identity = ComplexMatrix::Identity(dim, dim);

  int it = 0;
  while (it < config.max_iterations) {
    ++it;
    const ComplexMatrix r = eval.r_operator(eval.coefficients(p));
    ComplexMatrix candidate = normalized_sandwich(r, rho);
    Matrix cand_p = eval.probabilities(candidate);
    double cand_value = eval.log_likelihood(cand_p, &floored);
    if (!(cand_value >= current)) {
      // Diluted steps increase the likelihood for small enough epsilon unless
      // rho is already stationary.
      bool accepted = false;
      for (double eps = 1.0; eps > 1e-12; eps *= 0.5) {
        candidate = normalized_sandwich(identity + eps * r, rho);
        cand_p = eval.probabilities(candidate);
        cand_value = eval.log_likelihood(cand_p, &floored);
        if (cand_value >= current) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        report.converged = true;
        break;
      }
    }
    const double gain = (cand_value - current) / std::max(std::abs(current), 1e-300);
    rho = candidate;
    p = cand_p;
    current = cand_value;
    report.log_likelihood_trace.push_back(current);
    if (gain < config.tolerance) {
      report.converged = true;
      break;
    }
  }
  report.iterations = it;
  if (!report.converged) {
    report.warnings.push_back("Fock reconstruction stopped after " + std::to_string(it) + " iterations");
  }
  if (floored) {
    report.warnings.push_back("observed cell with probability below 1e-12 regularized to the floor");
  }

  const Vector phase_totals = eval.frequencies().rowwise().sum();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double f = eval.frequencies()(i, j);
      if (f > 0.0) worst = std::max(worst, std::abs(p(i, j) * phase_totals(i) - f) / f);
    }
  report.max_relative_deviation = worst;
  report.rho = DensityMatrix(rho);
  return report;
}

std::vector<double> wigner_from_rho(const DensityMatrix& rho, std::span<const std::array<double, 2>> grid) {
  const int dim = rho.dim();
  std::vector<double> lgam(static_cast<std::size_t>(dim) + 1);
  for (int k = 0; k <= dim; ++k) lgam[k] = std::lgamma(k + 1.0);

  std::vector<double> out;
  out.reserve(grid.size());
  std::vector<double> laguerre(static_cast<std::size_t>(dim));
  for (const auto& pt : grid) {
    const double x = pt[0];
    const double y = pt[1];
    const double r2 = x * x + y * y;
    const double z = 2.0 * r2;
    const double angle = std::atan2(y, x);
    double w = 0.0;
    for (int d = 0; d < dim; ++d) {
      if (d > 0 && r2 == 0.0) break;
      const int count = dim - d;
      // Generalized Laguerre L_n^{(d)}(z), n = 0 .. count-1.
      laguerre[0] = 1.0;
      if (count > 1) laguerre[1] = 1.0 + d - z;
      for (int n = 1; n + 1 < count; ++n) {
        laguerre[n + 1] = ((2.0 * n + 1.0 + d - z) * laguerre[n] - (n + d) * laguerre[n - 1]) / (n + 1.0);
      }
      const double log_radial = d > 0 ? d * std::log(std::sqrt(2.0 * r2)) : 0.0;
      const Complex phase = std::polar(1.0, -d * angle);
      for (int n = 0; n < count; ++n) {
        const int m = n + d;
        const double magnitude = std::exp(0.5 * (lgam[n] - lgam[m]) + log_radial - r2) * laguerre[n];
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        const Complex term = rho(m, n) * phase * (sign * magnitude);
        w += d == 0 ? term.real() : 2.0 * term.real();
      }
    }
    out.push_back(w / std::numbers::pi);
  }
  return out;
}

double hs_distance(const DensityMatrix& a, const DensityMatrix& b) {
  const int dim = std::max(a.dim(), b.dim());
  ComplexMatrix diff = ComplexMatrix::Zero(dim, dim);
  diff.topLeftCorner(a.dim(), a.dim()) += a.entries();
  diff.topLeftCorner(b.dim(), b.dim()) -= b.entries();
  // Tr[(a-b)^2] = sum |diff_mn|^2 for Hermitian diff.
  return diff.cwiseAbs2().sum();
}

FockMoments covariance_from_rho(const DensityMatrix& rho) {
  const int dim = rho.dim();
  Complex a1 = 0.0;
  Complex a2 = 0.0;
  double n_mean = 0.0;
  for (int m = 0; m < dim; ++m) {
    n_mean += m * rho(m, m).real();
    if (m + 1 < dim) a1 += rho(m + 1, m) * std::sqrt(m + 1.0);
    if (m + 2 < dim) a2 += rho(m + 2, m) * std::sqrt((m + 1.0) * (m + 2.0));
  }
  const double mx = std::numbers::sqrt2 * a1.real();
  const double my = std::numbers::sqrt2 * a1.imag();
  Matrix2 g;
  g(0, 0) = a2.real() + n_mean + 0.5 - mx * mx;
  g(1, 1) = n_mean + 0.5 - a2.real() - my * my;
  g(0, 1) = g(1, 0) = a2.imag() - mx * my;

  FockMoments out;
  out.covariance = CovarianceMatrix(g);
  out.mean = DisplacementVector(Vector{{mx, my}});
  out.top_population = rho(dim - 1, dim - 1).real() + (dim > 1 ? rho(dim - 2, dim - 2).real() : 0.0);
  if (out.top_population > 1e-3) {
    out.warnings.push_back("population of the two highest Fock levels is " + std::to_string(out.top_population) +
                           "; moments are affected by truncation");
  }
  return out;
}

}  // namespace gausstomo
