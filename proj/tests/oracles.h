#pragma once

// Independent reference computations shared by the test suites.

#include <cmath>
#include <numbers>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "gausstomo/gaussian_core.h"
#include "gausstomo/homodyne_data.h"

namespace oracle {

using gausstomo::BinnedStats;
using gausstomo::BinRecord;
using gausstomo::Matrix;
using gausstomo::Vector;

inline Vector u_vector(double phase) { return Vector{{std::cos(phase), std::sin(phase)}}; }

// Single-mode statistics from (phase, n, y) triples; y fills both second-moment fields.
inline BinnedStats stats_from(const std::vector<std::tuple<double, std::size_t, double>>& rows) {
  BinnedStats s;
  s.mode_count = 1;
  for (const auto& [phase, n, y] : rows) {
    BinRecord b;
    b.setting = {phase, 0.0, gausstomo::ModeSelector::kFirst};
    b.count = n;
    b.sum = 0.0;
    b.sum_sq = y;
    b.centered_sum_sq = y;
    s.bins.push_back(b);
  }
  return s;
}

// Statistics at exact stationarity: y_h = n_h sigma_h^2 for the given G.
inline BinnedStats exact_stats(const Matrix& g, double eta, const BinnedStats& layout) {
  BinnedStats s = layout;
  const double noise = (1.0 - eta) / (2.0 * eta);
  for (auto& b : s.bins) {
    const Vector w = gausstomo::ProjectionVector::for_setting(b.setting, s.mode_count).entries();
    const double y = static_cast<double>(b.count) * (w.dot(g * w) + noise);
    b.sum = 0.0;
    b.sum_sq = y;
    b.centered_sum_sq = y;
  }
  return s;
}

// Loop-accumulated D and R, written out entry by entry.
inline std::pair<Matrix, Matrix> loop_d_r(const Matrix& g, double eta, const BinnedStats& s) {
  const int dim = static_cast<int>(g.rows());
  const double noise = (1.0 - eta) / (2.0 * eta);
  Matrix d = Matrix::Zero(dim, dim);
  Matrix r = Matrix::Zero(dim, dim);
  for (const auto& b : s.bins) {
    const Vector w = gausstomo::ProjectionVector::for_setting(b.setting, s.mode_count).entries();
    double var = noise;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) var += w(i) * g(i, j) * w(j);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        d(i, j) += static_cast<double>(b.count) / var * w(i) * w(j);
        r(i, j) += b.centered_sum_sq / (var * var) * w(i) * w(j);
      }
    }
  }
  return {d, r};
}

// Parameters are the entries G[i][j], i <= j; a_h is the derivative of
// sigma_h^2 with respect to them.
inline Matrix design(const BinnedStats& s) {
  const int dim = 2 * s.mode_count;
  const int p = dim * (dim + 1) / 2;
  Matrix a(static_cast<Eigen::Index>(s.bins.size()), p);
  for (std::size_t h = 0; h < s.bins.size(); ++h) {
    const Vector w = gausstomo::ProjectionVector::for_setting(s.bins[h].setting, s.mode_count).entries();
    int k = 0;
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) a(static_cast<Eigen::Index>(h), k++) = (i == j ? 1.0 : 2.0) * w(i) * w(j);
  }
  return a;
}

// Asymptotic standard errors of the ML estimate (inverse Fisher information,
// y_h / sigma_h^2 ~ chi^2_n) and of the unweighted least-squares fit
// (sandwich with var(y_h / n_h) = 2 sigma_h^4 / n_h), combined in quadrature.
// Returned in (i <= j) entry order.
inline Vector combined_standard_errors(const BinnedStats& s, const Matrix& g, double eta) {
  const Matrix a = design(s);
  const double noise = (1.0 - eta) / (2.0 * eta);
  const Eigen::Index p = a.cols();
  Matrix fisher = Matrix::Zero(p, p);
  Vector var_z(a.rows());
  for (Eigen::Index h = 0; h < a.rows(); ++h) {
    const auto& b = s.bins[static_cast<std::size_t>(h)];
    const Vector w = gausstomo::ProjectionVector::for_setting(b.setting, s.mode_count).entries();
    const double var = w.dot(g * w) + noise;
    const double n = static_cast<double>(b.count);
    fisher += n / (2.0 * var * var) * a.row(h).transpose() * a.row(h);
    var_z(h) = 2.0 * var * var / n;
  }
  const Matrix cov_ml = fisher.inverse();
  const Matrix ata_inv = (a.transpose() * a).inverse();
  const Matrix cov_lsq = ata_inv * a.transpose() * var_z.asDiagonal() * a * ata_inv;
  return (cov_ml.diagonal() + cov_lsq.diagonal()).cwiseSqrt();
}

inline Vector upper_entries(const Matrix& g) {
  const int dim = static_cast<int>(g.rows());
  Vector v(dim * (dim + 1) / 2);
  int k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) v(k++) = g(i, j);
  return v;
}

// Physical single-mode covariance: thermal nu times a squeezing r along angle t.
inline Matrix squeezed_thermal(double nu, double r, double t) {
  const Matrix rot = gausstomo::rotation_matrix(t);
  const Matrix sq = Vector{{std::exp(2 * r), std::exp(-2 * r)}}.asDiagonal();
  return nu * rot * sq * rot.transpose();
}

}  // namespace oracle
