#pragma once

// Generic homodyne tomography in a truncated Fock space: binned quadrature
// POVM, maximum-likelihood density-matrix reconstruction, Wigner functions and
// moment extraction for comparison with the Gaussian fit.

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gausstomo/gaussian_core.h"
#include "gausstomo/homodyne_data.h"

namespace gausstomo {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr int kMaxFockDimension = 64;

// psi_k(y) = pi^-1/4 exp(-y^2/2) H_k(y) / sqrt(2^k k!), via the normalized
// three-term recurrence. 0 <= k <= kMaxFockDimension.
double hermite_wavefunction(int k, double y);

// psi_0(y) ... psi_{count-1}(y).
Vector hermite_wavefunctions(int count, double y);

// Hermitian, unit-trace, positive semidefinite matrix in the Fock basis.
class DensityMatrix {
 public:
  // Validates the invariants (Hermitian to 1e-12, trace 1 to 1e-10, eigenvalues
  // >= -1e-10) and stores the exactly Hermitian part.
  explicit DensityMatrix(const ComplexMatrix& entries);

  static DensityMatrix fock(int n, int dim);
  static DensityMatrix thermal(double mean_photons, int dim);  // renormalized after truncation

  int dim() const { return static_cast<int>(entries_.rows()); }
  const ComplexMatrix& entries() const { return entries_; }
  Complex operator()(int m, int n) const { return entries_(m, n); }

 private:
  ComplexMatrix entries_;
};

// Quadrature interval in efficiency-rescaled units; +-infinity allowed.
struct QuadratureBin {
  double lower = 0.0;
  double upper = 0.0;
};

// Phase-0 POVM element for `bin`: the real symmetric matrix
// <m| Pi |n> = int dy w(y) psi_m(y) psi_n(y), with w the indicator of the bin
// (eta = 1) or its convolution with the detector-noise Gaussian of variance
// (1 - eta) / (2 eta).
Matrix povm_bin_matrix(const QuadratureBin& bin, double eta, int dim);

// Element for local-oscillator phase `phase`:
// <m|Pi|n> = exp(i (m - n) phase) <m|Pi_0|n>.
ComplexMatrix povm_element(double phase, const QuadratureBin& bin, double eta, int dim);

// 2 pi-periodic grid of phase bins times quadrature bins, with the observed
// count for each pair. Elements for one phase sum to the identity.
class QuadraturePOVM {
 public:
  QuadraturePOVM(std::vector<double> phases, std::vector<QuadratureBin> bins, double eta, int dim,
                 Matrix counts);

  int dim() const { return dim_; }
  double efficiency() const { return eta_; }
  const std::vector<double>& phases() const { return phases_; }
  const std::vector<QuadratureBin>& bins() const { return bins_; }
  const Matrix& counts() const { return counts_; }            // phases x bins
  const Matrix& bin_matrix(std::size_t b) const { return base_[b]; }
  std::size_t element_count() const { return phases_.size() * bins_.size(); }
  ComplexMatrix element(std::size_t phase_index, std::size_t bin_index) const;

 private:
  std::vector<double> phases_;
  std::vector<QuadratureBin> bins_;
  double eta_;
  int dim_;
  Matrix counts_;
  std::vector<Matrix> base_;
};

struct PovmConfig {
  int phase_bins = 31;
  int quadrature_bins = 31;
  int dim = 25;
  bool include_efficiency = true;
};

// Pools single-mode samples into phase x quadrature cells. Quadrature bins
// split [min, max] of the data evenly; the outer two are open-ended.
QuadraturePOVM build_povm(const HomodyneDataset& dataset, const PovmConfig& config);

struct FockConfig {
  int max_iterations = 5000;
  double tolerance = 1e-9;  // relative log-likelihood gain
};

struct FockReport {
  DensityMatrix rho = DensityMatrix::fock(0, 1);
  int iterations = 0;
  bool converged = false;
  std::vector<double> log_likelihood_trace;  // sum_j f_j log p_j
  double max_relative_deviation = 0.0;       // max_j |p_j - f_j| / f_j over observed cells
  std::vector<std::string> warnings;
};

// sum_j f_j log p_j with f_j the per-sample frequencies and p_j the
// conditional probabilities given the phase.
double fock_log_likelihood(const DensityMatrix& rho, const QuadraturePOVM& povm);

// Iterates rho <- R rho R / Tr[R rho R], R = sum_j f_j/p_j Pi_j, falling back
// to the diluted map (1 + e R) rho (1 + e R) whenever a full step would lower
// the likelihood.
FockReport ml_reconstruct(const QuadraturePOVM& povm, const FockConfig& config = {});

// W(x, y) with the same normalization as wigner_gaussian (vacuum peak 1/pi).
std::vector<double> wigner_from_rho(const DensityMatrix& rho, std::span<const std::array<double, 2>> grid);

// Tr[(a - b)^2]; the smaller matrix is zero-padded.
double hs_distance(const DensityMatrix& a, const DensityMatrix& b);

struct FockMoments {
  CovarianceMatrix covariance = CovarianceMatrix::vacuum(1);
  DisplacementVector mean = DisplacementVector::zero(1);
  double top_population = 0.0;  // weight on the two highest Fock levels
  std::vector<std::string> warnings;
};

FockMoments covariance_from_rho(const DensityMatrix& rho);

}  // namespace gausstomo
