#pragma once

// Maximum-likelihood covariance estimation from binned homodyne statistics.
//
// Each bin h contributes n_h samples whose squared sum y_h is chi^2
// distributed with scale sigma_h^2 = w_h^T G w_h + delta_eta^2. The stationary
// points of
//
//   log L(G) = -1/2 sum_h n_h log sigma_h^2 - sum_h y_h / (2 sigma_h^2)
//
// satisfy R G = D G with D = sum n_h/sigma_h^2 w w^T and
// R = sum y_h/sigma_h^4 w w^T, which is solved by iterating
// G <- D^-1 R G R D^-1 from the vacuum.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gausstomo/gaussian_core.h"
#include "gausstomo/homodyne_data.h"

namespace gausstomo {

// Which per-bin squared sum feeds the likelihood.
enum class SecondMoment {
  kCentered,  // sum (x - mean_h)^2: insensitive to residual offsets
  kRaw,       // sum x^2
};

struct EstimatorConfig {
  int max_iterations = 10000;
  double residual_tolerance = 1e-10;
  // A step that lowers log L by more than this (relative to max(1, |log L|))
  // is retried with damping.
  double likelihood_tolerance = 1e-12;
  std::optional<CovarianceMatrix> initial;  // vacuum when empty
  double damping = 0.5;
  bool project_unphysical = false;
  SecondMoment moment = SecondMoment::kCentered;
  std::size_t min_bin_count = 10;  // sparser bins are merged into a neighbour
};

struct EstimatorReport {
  CovarianceMatrix estimate = CovarianceMatrix::vacuum(1);
  DisplacementVector displacement = DisplacementVector::zero(1);
  int iterations = 0;
  bool converged = false;
  std::vector<double> log_likelihood_trace;
  double final_residual = 0.0;
  PhysicalityReport physicality;
  std::vector<std::string> warnings;
  std::size_t sample_count = 0;
  // Per-sample Gaussian log density at the estimate, 2 pi constant included.
  double mean_log_density = 0.0;
};

struct ExtremalOperators {
  Matrix d;
  Matrix r;
};

double log_likelihood(const CovarianceMatrix& g, const BinnedStats& stats, double eta,
                      SecondMoment moment = SecondMoment::kCentered);

Matrix build_D(const CovarianceMatrix& g, const BinnedStats& stats, double eta);
Matrix build_R(const CovarianceMatrix& g, const BinnedStats& stats, double eta,
               SecondMoment moment = SecondMoment::kCentered);
ExtremalOperators build_extremal_operators(const CovarianceMatrix& g, const BinnedStats& stats, double eta,
                                           SecondMoment moment = SecondMoment::kCentered);

// Symmetric matrix (R - D)/2: d log L = <gradient, dG>_F for symmetric dG.
Matrix log_likelihood_gradient(const CovarianceMatrix& g, const BinnedStats& stats, double eta,
                               SecondMoment moment = SecondMoment::kCentered);

// ||R G - D G||_F / ||D G||_F.
double extremal_residual(const CovarianceMatrix& g, const BinnedStats& stats, double eta,
                         SecondMoment moment = SecondMoment::kCentered);

// One step G -> D^-1 R G R D^-1. Throws IllPosedError if D is singular.
CovarianceMatrix iterate_once(const CovarianceMatrix& g, const BinnedStats& stats, double eta,
                              SecondMoment moment = SecondMoment::kCentered);

// Rank analysis of the linear map G -> (w_h^T G w_h)_h over the independent
// entries G[i][j], i <= j.
struct Identifiability {
  int rank = 0;
  int parameter_count = 0;
  std::vector<Vector> null_directions;  // orthonormal, in (i <= j) entry order

  bool complete() const { return rank == parameter_count; }
};

Identifiability analyze_settings(const BinnedStats& stats);

// Entry G14 - G23 of a two-mode matrix. No beam-splitter setting S_BS(v) with
// port projections (cos, sin) can see it, so two-mode estimates keep it at
// its initial value.
Vector unobservable_cross_direction();

// Human-readable name of a direction in (i <= j) entry order, e.g.
// "+0.71*G[1,4] -0.71*G[2,3]".
std::string describe_direction(const Vector& direction, int dim);

// Merges bins with fewer than `min_count` samples into an adjacent bin of the
// same (bs_angle, mode) group.
BinnedStats merge_sparse_bins(const BinnedStats& stats, std::size_t min_count);

// Count-weighted least-squares fit of bin means to w_h^T m.
DisplacementVector fit_displacement(const BinnedStats& stats, std::vector<std::string>* warnings = nullptr);

EstimatorReport estimate(const BinnedStats& stats, double eta, const EstimatorConfig& config = {});
EstimatorReport estimate_two_mode(const BinnedStats& stats, double eta, const EstimatorConfig& config = {});

// Unweighted least squares of y_h/n_h - delta_eta^2 = w_h^T G w_h with no
// positivity constraint. Independent cross-check of the ML estimate.
CovarianceMatrix oracle_lsq_fit(const BinnedStats& stats, double eta, SecondMoment moment = SecondMoment::kCentered);

}  // namespace gausstomo
