#include "gausstomo/gaussian_core.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "gausstomo/errors.h"

namespace gausstomo {
namespace {

void require_mode_count(int modes) {
  if (modes != 1 && modes != 2) {
    throw DimensionError("mode count must be 1 or 2, got " + std::to_string(modes));
  }
}

// Standard real symplectic form with blocks [[0, 1], [-1, 0]].
Matrix standard_form(int modes) {
  Matrix j = Matrix::Zero(2 * modes, 2 * modes);
  for (int k = 0; k < modes; ++k) {
    j(2 * k, 2 * k + 1) = 1.0;
    j(2 * k + 1, 2 * k) = -1.0;
  }
  return j;
}

bool is_positive_definite(const Matrix& g) {
  Eigen::LLT<Matrix> llt(g);
  return llt.info() == Eigen::Success;
}

}  // namespace

CovarianceMatrix::CovarianceMatrix(const Matrix& entries) {
  if (entries.rows() != entries.cols()) {
    throw DimensionError("covariance matrix must be square");
  }
  if (entries.rows() != 2 && entries.rows() != 4) {
    throw DimensionError("covariance matrix must be 2x2 or 4x4, got " + std::to_string(entries.rows()) +
                         "x" + std::to_string(entries.cols()));
  }
  if (!entries.allFinite()) {
    throw DomainError("covariance matrix has non-finite entries");
  }
  entries_ = 0.5 * (entries + entries.transpose());
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    if (!(entries_(i, i) > 0.0)) {
      throw DomainError("covariance matrix diagonal entry " + std::to_string(i) + " is not positive");
    }
  }
}

CovarianceMatrix CovarianceMatrix::vacuum(int mode_count) {
  require_mode_count(mode_count);
  return CovarianceMatrix(kVacuumVariance * Matrix::Identity(2 * mode_count, 2 * mode_count));
}

DisplacementVector::DisplacementVector(const Vector& entries) : entries_(entries) {
  if (entries.size() != 2 && entries.size() != 4) {
    throw DimensionError("displacement must have 2 or 4 entries");
  }
  if (!entries.allFinite()) {
    throw DomainError("displacement has non-finite entries");
  }
}

DisplacementVector DisplacementVector::zero(int mode_count) {
  require_mode_count(mode_count);
  return DisplacementVector(Vector::Zero(2 * mode_count));
}

ProjectionVector ProjectionVector::for_setting(const Setting& setting, int mode_count) {
  require_mode_count(mode_count);
  if (!std::isfinite(setting.phase) || !std::isfinite(setting.bs_angle)) {
    throw DomainError("setting angles must be finite");
  }
  const double c = std::cos(setting.phase);
  const double s = std::sin(setting.phase);
  if (mode_count == 1) {
    return ProjectionVector(Vector{{c, s}}, setting);
  }
  Vector u = Vector::Zero(4);
  const int offset = setting.mode == ModeSelector::kFirst ? 0 : 2;
  u(offset) = c;
  u(offset + 1) = s;
  Vector w = bs_symplectic(setting.bs_angle).transpose() * u;
  return ProjectionVector(std::move(w), setting);
}

Matrix symplectic_form(int mode_count) {
  require_mode_count(mode_count);
  return -0.5 * standard_form(mode_count);
}

Matrix2 rotation_matrix(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Matrix2 r;
  r << c, s, -s, c;
  return r;
}

Matrix4 bs_symplectic(double vartheta) {
  const double c = std::cos(vartheta);
  const double s = std::sin(vartheta);
  Matrix4 m = Matrix4::Zero();
  m.topLeftCorner<2, 2>() = c * Matrix2::Identity();
  m.topRightCorner<2, 2>() = s * Matrix2::Identity();
  m.bottomLeftCorner<2, 2>() = -s * Matrix2::Identity();
  m.bottomRightCorner<2, 2>() = c * Matrix2::Identity();
  return m;
}

CovarianceMatrix transform_covariance(const CovarianceMatrix& g, const Matrix& s) {
  if (s.rows() != g.dim() || s.cols() != g.dim()) {
    throw DimensionError("transform size does not match covariance matrix");
  }
  return CovarianceMatrix(s * g.entries() * s.transpose());
}

double project_variance(const CovarianceMatrix& g, const Vector& w) {
  if (w.size() != g.dim()) {
    throw DimensionError("projection vector size does not match covariance matrix");
  }
  return w.dot(g.entries() * w);
}

double project_variance(const CovarianceMatrix& g, const ProjectionVector& w) {
  return project_variance(g, w.entries());
}

BlockDecomposition block_decompose(const CovarianceMatrix& g) {
  if (g.mode_count() != 2) {
    throw DimensionError("block decomposition needs a two-mode covariance matrix");
  }
  const Matrix& e = g.entries();
  BlockDecomposition b;
  b.g1 = e.topLeftCorner(2, 2);
  b.g2 = e.bottomRightCorner(2, 2);
  b.g3 = e.topRightCorner(2, 2);
  b.g4 = b.g3.transpose();
  return b;
}

Matrix4 assemble_blocks(const BlockDecomposition& blocks) {
  Matrix4 m;
  m.topLeftCorner<2, 2>() = blocks.g1;
  m.bottomRightCorner<2, 2>() = blocks.g2;
  m.topRightCorner<2, 2>() = blocks.g3;
  m.bottomLeftCorner<2, 2>() = blocks.g4;
  return m;
}

Vector symplectic_eigenvalues(const Matrix& g) {
  if (g.rows() != g.cols() || (g.rows() != 2 && g.rows() != 4)) {
    throw DimensionError("symplectic eigenvalues need a 2x2 or 4x4 matrix");
  }
  const int modes = static_cast<int>(g.rows()) / 2;
  if (modes == 1) {
    return Vector::Constant(1, std::sqrt(std::abs(g.determinant())));
  }
  const Eigen::MatrixXcd ijg = std::complex<double>(0.0, 1.0) * (standard_form(modes) * g).cast<std::complex<double>>();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(ijg, false);
  std::vector<double> moduli;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    moduli.push_back(std::abs(solver.eigenvalues()(i)));
  }
  // Eigenvalues come in +-nu pairs; take every other after sorting.
  std::sort(moduli.begin(), moduli.end());
  Vector nu(modes);
  for (int k = 0; k < modes; ++k) nu(k) = 0.5 * (moduli[2 * k] + moduli[2 * k + 1]);
  return nu;
}

PhysicalityReport check_physical(const Matrix& g, double tol) {
  if (g.rows() != g.cols()) throw DimensionError("covariance matrix must be square");
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError("covariance matrix is not symmetric");
  }
  const int modes = static_cast<int>(g.rows()) / 2;
  require_mode_count(modes);

  PhysicalityReport report;
  const bool positive = is_positive_definite(g);
  if (modes == 1) {
    const double det = g.determinant();
    report.min_symplectic_eigenvalue = det > 0.0 ? std::sqrt(det) : 0.0;
  } else {
    report.min_symplectic_eigenvalue = positive ? symplectic_eigenvalues(g).minCoeff() : 0.0;
  }
  const Eigen::MatrixXcd h = g.cast<std::complex<double>>() +
                             std::complex<double>(0.0, 1.0) * symplectic_form(modes).cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
  report.min_uncertainty_eigenvalue = solver.eigenvalues().minCoeff();
  report.physical = positive && report.min_symplectic_eigenvalue >= kVacuumVariance - tol;
  return report;
}

PhysicalityReport check_physical(const CovarianceMatrix& g, double tol) {
  return check_physical(g.entries(), tol);
}

CovarianceMatrix floor_symplectic_eigenvalues(const CovarianceMatrix& g, double floor) {
  const Matrix& e = g.entries();
  if (!is_positive_definite(e)) {
    throw DomainError("cannot floor symplectic eigenvalues of an indefinite matrix");
  }
  if (g.mode_count() == 1) {
    const double nu = std::sqrt(e.determinant());
    if (nu >= floor) return g;
    return CovarianceMatrix((floor / nu) * e);
  }

  // Williamson frame: with A = G^{-1/2} J G^{-1/2} antisymmetric and
  // O^T A O = blockdiag(b_k [[0,1],[-1,0]]), nu_k = 1/b_k and
  // G = S diag(nu) S^T with symplectic S = G^{1/2} O diag(nu)^{-1/2}. Replacing
  // nu by max(nu, floor) gives G' = G^{1/2} O diag(nu'/nu) O^T G^{1/2}.
  Eigen::SelfAdjointEigenSolver<Matrix> sqrt_solver(e);
  const Matrix root = sqrt_solver.operatorSqrt();
  const Matrix inv_root = sqrt_solver.operatorInverseSqrt();
  const Matrix a = inv_root * standard_form(2) * inv_root;

  Eigen::RealSchur<Matrix> schur(a);
  Matrix o = schur.matrixU();
  const Matrix t = schur.matrixT();
  Vector ratio = Vector::Ones(4);
  for (int k = 0; k < 2; ++k) {
    double b = t(2 * k, 2 * k + 1);
    if (b < 0.0) {
      o.col(2 * k).swap(o.col(2 * k + 1));
      b = -b;
    }
    const double nu = 1.0 / b;
    const double scaled = std::max(nu, floor) / nu;
    ratio(2 * k) = scaled;
    ratio(2 * k + 1) = scaled;
  }
  return CovarianceMatrix(root * o * ratio.asDiagonal() * o.transpose() * root);
}

double wigner_gaussian(const CovarianceMatrix& g, const DisplacementVector& mean, const Vector& point) {
  if (mean.entries().size() != g.dim() || point.size() != g.dim()) {
    throw DimensionError("mean/point size does not match covariance matrix");
  }
  Eigen::LLT<Matrix> llt(g.entries());
  if (llt.info() != Eigen::Success) {
    throw DomainError("Wigner function needs a positive-definite covariance matrix");
  }
  const Vector d = point - mean.entries();
  const double quad = d.dot(llt.solve(d));
  const double det = g.entries().determinant();
  const double norm = std::pow(2.0 * std::numbers::pi, g.mode_count()) * std::sqrt(det);
  return std::exp(-0.5 * quad) / norm;
}

}  // namespace gausstomo
