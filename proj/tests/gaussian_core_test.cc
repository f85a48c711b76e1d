#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "gausstomo/errors.h"
#include "gausstomo/gaussian_core.h"

using namespace gausstomo;

namespace {

constexpr double kPi = std::numbers::pi;

Matrix go() { return Matrix{{2.38, -0.53}, {-0.53, 0.55}}; }

// Random physical two-mode covariance: S diag(nu) S^T with S a product of
// local squeezers, rotations and a beam splitter.
Matrix random_physical_two_mode(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix g = Matrix::Zero(4, 4);
  g(0, 0) = g(1, 1) = 0.5 + u(rng);
  g(2, 2) = g(3, 3) = 0.5 + u(rng);
  auto local = [&](double r1, double t1, double r2, double t2) {
    Matrix s = Matrix::Zero(4, 4);
    Matrix2 sq1{{std::exp(r1), 0}, {0, std::exp(-r1)}};
    Matrix2 sq2{{std::exp(r2), 0}, {0, std::exp(-r2)}};
    s.block<2, 2>(0, 0) = rotation_matrix(t1) * sq1;
    s.block<2, 2>(2, 2) = rotation_matrix(t2) * sq2;
    return s;
  };
  const Matrix s = local(u(rng) - 0.5, 6 * u(rng), u(rng) - 0.5, 6 * u(rng)) * Matrix(bs_symplectic(1.5 * u(rng))) *
                   local(u(rng) - 0.5, 6 * u(rng), u(rng) - 0.5, 6 * u(rng));
  return s * g * s.transpose();
}

}  // namespace

TEST(CovarianceMatrix, StoresSymmetrizedEntries) {
  const CovarianceMatrix g(Matrix{{1.0, 0.2}, {0.3, 2.0}});
  EXPECT_EQ(g(0, 1), g(1, 0));
  EXPECT_DOUBLE_EQ(g(0, 1), 0.25);
}

TEST(CovarianceMatrix, RejectsBadShapesAndDiagonal) {
  EXPECT_THROW(CovarianceMatrix(Matrix::Identity(3, 3)), DimensionError);
  EXPECT_THROW(CovarianceMatrix(Matrix{{0.0, 0.0}, {0.0, 1.0}}), DomainError);
  EXPECT_THROW(CovarianceMatrix(Matrix{{NAN, 0.0}, {0.0, 1.0}}), DomainError);
}

TEST(SymplecticForm, AntisymmetricAndSquaresToQuarter) {
  for (int m : {1, 2}) {
    const Matrix o = symplectic_form(m);
    EXPECT_TRUE(o.isApprox(-o.transpose()));
    EXPECT_TRUE((o * o).isApprox(-0.25 * Matrix::Identity(2 * m, 2 * m)));
  }
}

TEST(Rotation, Examples) {
  EXPECT_TRUE(rotation_matrix(0.0).isApprox(Matrix2::Identity()));
  const Matrix2 quarter{{0, 1}, {-1, 0}};
  EXPECT_LT((rotation_matrix(kPi / 2) - quarter).norm(), 1e-15);
  EXPECT_LT((rotation_matrix(0.7) * rotation_matrix(-0.7) - Matrix2::Identity()).norm(), 1e-15);
}

TEST(Rotation, OrthogonalUnitDeterminant) {
  for (double t = -7.0; t < 7.0; t += 0.37) {
    const Matrix2 r = rotation_matrix(t);
    EXPECT_LT((r.transpose() * r - Matrix2::Identity()).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  }
}

TEST(BeamSplitter, Examples) {
  EXPECT_TRUE(bs_symplectic(0.0).isApprox(Matrix4::Identity()));
  const Matrix4 s = bs_symplectic(kPi / 4);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(s(0, 0), h, 1e-15);
  EXPECT_NEAR(s(0, 2), h, 1e-15);
  EXPECT_NEAR(s(2, 0), -h, 1e-15);
  EXPECT_NEAR(s(3, 3), h, 1e-15);
  EXPECT_EQ(s(0, 1), 0.0);
}

TEST(BeamSplitter, PreservesSymplecticForm) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  const Matrix o = symplectic_form(2);
  for (int i = 0; i < 100; ++i) {
    const Matrix s = bs_symplectic(u(rng));
    EXPECT_LT((s * o * s.transpose() - o).norm(), 1e-12);
  }
}

TEST(Transform, VacuumInvariantAndIdentity) {
  const auto vac = CovarianceMatrix::vacuum(2);
  EXPECT_LT((transform_covariance(vac, bs_symplectic(kPi / 4)).entries() - vac.entries()).norm(), 1e-15);
  std::mt19937_64 rng(2);
  const CovarianceMatrix g(random_physical_two_mode(rng));
  EXPECT_EQ(transform_covariance(g, Matrix::Identity(4, 4)).entries(), g.entries());
  EXPECT_THROW(transform_covariance(g, Matrix::Identity(2, 2)), DimensionError);
}

TEST(Transform, BalancedSplitterBlocks) {
  std::mt19937_64 rng(3);
  const CovarianceMatrix g(random_physical_two_mode(rng));
  const auto in = block_decompose(g);
  const auto out = block_decompose(transform_covariance(g, bs_symplectic(kPi / 4)));
  const Matrix2 a_plus = 0.5 * (in.g1 + in.g2 + in.g3 + in.g4);
  const Matrix2 a_minus = 0.5 * (in.g1 + in.g2 - in.g3 - in.g4);
  const Matrix2 c = 0.5 * (in.g2 - in.g1 + in.g3 - in.g4);
  EXPECT_LT((out.g1 - a_plus).norm(), 1e-12);
  EXPECT_LT((out.g2 - a_minus).norm(), 1e-12);
  EXPECT_LT((out.g3 - c).norm(), 1e-12);
}

TEST(ProjectVariance, Examples) {
  const auto vac = CovarianceMatrix::vacuum(1);
  for (double t : {0.0, 0.4, 2.0}) {
    EXPECT_NEAR(project_variance(vac, ProjectionVector::for_setting({t, 0.0, ModeSelector::kFirst}, 1)), 0.5, 1e-15);
  }
  const CovarianceMatrix g(go());
  EXPECT_NEAR(project_variance(g, ProjectionVector::for_setting({0.0}, 1)), 2.38, 1e-15);
  EXPECT_NEAR(project_variance(g, ProjectionVector::for_setting({kPi / 4}, 1)), 0.935, 1e-12);
  EXPECT_THROW(project_variance(g, Vector::Ones(4)), DimensionError);
}

TEST(ProjectVariance, UnitNormAndAdjointConsistency) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2 * kPi);
  const CovarianceMatrix g(random_physical_two_mode(rng));
  for (int i = 0; i < 50; ++i) {
    const Setting s{u(rng), u(rng), i % 2 ? ModeSelector::kSecond : ModeSelector::kFirst};
    const Vector w = ProjectionVector::for_setting(s, 2).entries();
    EXPECT_NEAR(w.norm(), 1.0, 1e-14);
    const Matrix sbs = bs_symplectic(u(rng));
    const Vector stw = sbs.transpose() * w;
    EXPECT_NEAR(project_variance(transform_covariance(g, sbs), w),
                project_variance(g, Vector(stw / stw.norm())) * stw.squaredNorm(), 1e-12);
  }
}

TEST(ProjectVariance, TwoModeVectorsFollowSplitter) {
  // Port 1 of the balanced splitter sees (u, u)/sqrt 2; port 2 sees (-u, u)/sqrt 2.
  const double h = 1.0 / std::sqrt(2.0);
  const Vector w1 = ProjectionVector::for_setting({0.3, kPi / 4, ModeSelector::kFirst}, 2).entries();
  const Vector w2 = ProjectionVector::for_setting({0.3, kPi / 4, ModeSelector::kSecond}, 2).entries();
  const Vector u{{std::cos(0.3), std::sin(0.3)}};
  EXPECT_LT((w1.head<2>() - h * u).norm(), 1e-15);
  EXPECT_LT((w1.tail<2>() - h * u).norm(), 1e-15);
  EXPECT_LT((w2.head<2>() + h * u).norm(), 1e-15);
  EXPECT_LT((w2.tail<2>() - h * u).norm(), 1e-15);
}

TEST(Blocks, DecomposeAndReassemble) {
  const auto b = block_decompose(CovarianceMatrix::vacuum(2));
  EXPECT_TRUE(b.g1.isApprox(0.5 * Matrix2::Identity()));
  EXPECT_TRUE(b.g2.isApprox(0.5 * Matrix2::Identity()));
  EXPECT_EQ(b.g3.norm(), 0.0);
  std::mt19937_64 rng(5);
  const CovarianceMatrix g(random_physical_two_mode(rng));
  const auto d = block_decompose(g);
  EXPECT_EQ(d.g4, d.g3.transpose());
  EXPECT_EQ(Matrix(assemble_blocks(d)), g.entries());
  EXPECT_THROW(block_decompose(CovarianceMatrix::vacuum(1)), DimensionError);
}

TEST(Physicality, Examples) {
  const auto vac = check_physical(CovarianceMatrix::vacuum(1));
  EXPECT_NEAR(vac.min_symplectic_eigenvalue, 0.5, 1e-15);
  EXPECT_TRUE(vac.physical);
  const auto o = check_physical(CovarianceMatrix(go()));
  EXPECT_NEAR(o.min_symplectic_eigenvalue, std::sqrt(2.38 * 0.55 - 0.53 * 0.53), 1e-12);
  EXPECT_NEAR(o.min_symplectic_eigenvalue, 1.01, 0.01);
  EXPECT_TRUE(o.physical);
  const auto low = check_physical(CovarianceMatrix(0.4 * Matrix::Identity(2, 2)));
  EXPECT_NEAR(low.min_symplectic_eigenvalue, 0.4, 1e-15);
  EXPECT_FALSE(low.physical);
  EXPECT_THROW(check_physical(Matrix{{1.0, 0.1}, {0.2, 1.0}}), DomainError);
}

TEST(Physicality, TwoModeAgreesWithUncertaintyMatrix) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 30; ++i) {
    Matrix g = random_physical_two_mode(rng);
    if (i % 3 == 0) g *= 0.8;
    const auto r = check_physical(CovarianceMatrix(g));
    Eigen::MatrixXcd h = g.cast<std::complex<double>>();
    h += std::complex<double>(0, 1) * symplectic_form(2).cast<std::complex<double>>();
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(h).eigenvalues().minCoeff();
    EXPECT_NEAR(r.min_uncertainty_eigenvalue, min_eig, 1e-10);
    EXPECT_EQ(r.physical, min_eig >= -1e-9);
  }
}

TEST(Physicality, InvariantUnderSplitter) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int i = 0; i < 20; ++i) {
    const CovarianceMatrix g(random_physical_two_mode(rng));
    const auto before = check_physical(g);
    const auto after = check_physical(transform_covariance(g, bs_symplectic(u(rng))));
    EXPECT_NEAR(before.min_symplectic_eigenvalue, after.min_symplectic_eigenvalue, 1e-10);
    EXPECT_EQ(before.physical, after.physical);
  }
}

TEST(SymplecticEigenvalues, ProductStateAndThermal) {
  Matrix g = Matrix::Zero(4, 4);
  g.block<2, 2>(0, 0) = go();
  g.block<2, 2>(2, 2) = 1.5 * Matrix2::Identity();
  const Vector nu = symplectic_eigenvalues(g);  // ascending
  EXPECT_NEAR(nu(0), std::sqrt(go().determinant()), 1e-12);
  EXPECT_NEAR(nu(1), 1.5, 1e-12);
}

TEST(FloorSymplectic, OneModeRescale) {
  const CovarianceMatrix g(Matrix{{0.6, 0.1}, {0.1, 0.3}});
  const auto f = floor_symplectic_eigenvalues(g);
  EXPECT_NEAR(std::sqrt(f.entries().determinant()), 0.5, 1e-12);
  EXPECT_NEAR(f(0, 0) / f(1, 1), 2.0, 1e-12);
}

TEST(FloorSymplectic, TwoModeKeepsPhysicalEigenvalues) {
  std::mt19937_64 rng(8);
  const Matrix g = 0.7 * random_physical_two_mode(rng);
  const Vector before = symplectic_eigenvalues(g);
  const auto f = floor_symplectic_eigenvalues(CovarianceMatrix(g));
  const Vector after = symplectic_eigenvalues(f.entries());
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(after(k), std::max(before(k), 0.5), 1e-9);
  EXPECT_TRUE(check_physical(f).physical);
}

TEST(WignerGaussian, PeakValues) {
  const auto vac = CovarianceMatrix::vacuum(1);
  EXPECT_NEAR(wigner_gaussian(vac, DisplacementVector::zero(1), Vector::Zero(2)), 1.0 / kPi, 1e-15);
  const CovarianceMatrix g(go());
  const DisplacementVector m(Vector{{0.3, -1.2}});
  EXPECT_NEAR(wigner_gaussian(g, m, m.entries()), 1.0 / (2 * kPi * std::sqrt(go().determinant())), 1e-14);
}

TEST(WignerGaussian, GridIntegralIsOne) {
  // Composite Simpson on a box covering 6 sigma along the major axis.
  const CovarianceMatrix g(go());
  const double sx = 6 * std::sqrt(2.38);
  const double sy = 6 * std::sqrt(2.38);  // cover the rotated ellipse
  const int n = 600;
  const double hx = 2 * sx / n;
  const double hy = 2 * sy / n;
  auto weight = [&](int i) { return (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
  double total = 0.0;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      total += weight(i) * weight(j) *
               wigner_gaussian(g, DisplacementVector::zero(1), Vector{{-sx + i * hx, -sy + j * hy}});
    }
  }
  EXPECT_NEAR(total * hx * hy / 9.0, 1.0, 1e-6);
}
