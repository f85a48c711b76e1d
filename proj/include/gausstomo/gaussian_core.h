#pragma once

// Covariance-matrix algebra for one- and two-mode Gaussian states.
//
// Units: quadratures X = (a + a^dag)/sqrt(2), Y = i(a^dag - a)/sqrt(2), so the
// vacuum has variance 1/2 in every direction. Ordering is (X1, Y1, X2, Y2).

#include <compare>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace gausstomo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Matrix2 = Eigen::Matrix2d;
using Matrix4 = Eigen::Matrix4d;

inline constexpr double kVacuumVariance = 0.5;
inline constexpr double kPhysicalityTolerance = 1e-9;

// Real symmetric 2M x 2M matrix of quadrature (co)variances, M in {1, 2}.
// The stored entries are always exactly symmetric: construction replaces the
// input by (A + A^T)/2.
class CovarianceMatrix {
 public:
  explicit CovarianceMatrix(const Matrix& entries);

  static CovarianceMatrix vacuum(int mode_count);

  int mode_count() const { return static_cast<int>(entries_.rows()) / 2; }
  int dim() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

 private:
  Matrix entries_;
};

// Quadrature means, same ordering and units as CovarianceMatrix.
class DisplacementVector {
 public:
  explicit DisplacementVector(const Vector& entries);

  static DisplacementVector zero(int mode_count);

  int mode_count() const { return static_cast<int>(entries_.size()) / 2; }
  const Vector& entries() const { return entries_; }

 private:
  Vector entries_;
};

// Which beam-splitter output port the homodyne detector looks at.
enum class ModeSelector : std::uint8_t { kFirst = 1, kSecond = 2 };

// One homodyne measurement configuration: local-oscillator phase, beam-splitter
// angle (transmissivity cos^2) and the detected output port.
struct Setting {
  double phase = 0.0;
  double bs_angle = 0.0;
  ModeSelector mode = ModeSelector::kFirst;

  auto operator<=>(const Setting&) const = default;
};

// Unit vector w such that the detected quadrature variance is w^T G w.
class ProjectionVector {
 public:
  // Builds w = S_BS(bs_angle)^T u, with u = (cos, sin) embedded in the block
  // of the selected port. For mode_count == 1 only the phase is used.
  static ProjectionVector for_setting(const Setting& setting, int mode_count);

  const Vector& entries() const { return entries_; }
  const Setting& setting() const { return setting_; }

 private:
  ProjectionVector(Vector entries, Setting setting)
      : entries_(std::move(entries)), setting_(setting) {}

  Vector entries_;
  Setting setting_;
};

// Block-diagonal real antisymmetric form with blocks [[0, -1/2], [1/2, 0]].
// G is physical iff the Hermitian matrix G + i*symplectic_form is PSD.
Matrix symplectic_form(int mode_count);

// [[cos t, sin t], [-sin t, cos t]].
Matrix2 rotation_matrix(double theta);

// [[cos v I, sin v I], [-sin v I, cos v I]] for a beam splitter of
// transmissivity cos^2 v.
Matrix4 bs_symplectic(double vartheta);

// S G S^T, symmetrized.
CovarianceMatrix transform_covariance(const CovarianceMatrix& g, const Matrix& s);

// w^T G w.
double project_variance(const CovarianceMatrix& g, const ProjectionVector& w);
double project_variance(const CovarianceMatrix& g, const Vector& w);

struct BlockDecomposition {
  Matrix2 g1;  // reduced covariance of mode 1
  Matrix2 g2;  // reduced covariance of mode 2
  Matrix2 g3;  // cross block rows (X1, Y1), cols (X2, Y2)
  Matrix2 g4;  // g3^T
};

BlockDecomposition block_decompose(const CovarianceMatrix& g);
Matrix4 assemble_blocks(const BlockDecomposition& blocks);

struct PhysicalityReport {
  double min_symplectic_eigenvalue = 0.0;
  // Smallest eigenvalue of the Hermitian matrix G + i*symplectic_form.
  double min_uncertainty_eigenvalue = 0.0;
  bool physical = false;
};

// For one mode the symplectic eigenvalue is sqrt(det G). `physical` is true
// iff G is positive definite and every symplectic eigenvalue >= 1/2 - tol.
PhysicalityReport check_physical(const CovarianceMatrix& g, double tol = kPhysicalityTolerance);
// Raw-matrix overload; throws DomainError if `g` is not symmetric.
PhysicalityReport check_physical(const Matrix& g, double tol = kPhysicalityTolerance);

// Moduli of the eigenvalues of i*J*G, one per mode, ascending.
Vector symplectic_eigenvalues(const Matrix& g);

// Raises every symplectic eigenvalue below `floor` to `floor` while keeping the
// Williamson frame of G. One mode: uniform rescale to det = floor^2.
CovarianceMatrix floor_symplectic_eigenvalues(const CovarianceMatrix& g, double floor = kVacuumVariance);

// Gaussian Wigner function exp(-(X-m)^T G^-1 (X-m)/2) / ((2 pi)^M sqrt(det G)).
double wigner_gaussian(const CovarianceMatrix& g, const DisplacementVector& mean, const Vector& point);

}  // namespace gausstomo
