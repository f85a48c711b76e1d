#pragma once

// Normality tests on per-phase-bin homodyne samples.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gausstomo/homodyne_data.h"

namespace gausstomo {

// Reject normality when W_JB exceeds the 0.05 quantile of chi^2_2.
inline constexpr double kJarqueBeraThreshold = 5.99;
inline constexpr double kSignificance = 0.05;
inline constexpr std::size_t kShapiroWilkMinSize = 8;
inline constexpr std::size_t kShapiroWilkMaxSize = 5000;

// (1/N) sum (x - mean)^k.
double central_moment(std::span<const double> sample, int k);
double skewness(std::span<const double> sample);
double kurtosis_excess(std::span<const double> sample);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// W = N/6 (S^2 + K^2/4), p = exp(-W/2) (chi^2_2 survival function).
TestResult jarque_bera(std::span<const double> sample);
double chi2_2_survival(double w);

// Shapiro-Wilk W with Royston's polynomial approximations for the
// coefficients and the p-value, 8 <= n <= 5000.
TestResult shapiro_wilk(std::span<const double> sample);

// Larger samples are split into ceil(n / 5000) interleaved parts whose
// p-values are combined with Fisher's method; the reported statistic is the
// mean W over the parts.
TestResult shapiro_wilk_split(std::span<const double> sample);

// Fisher's method: -2 sum log p_i ~ chi^2 with 2k degrees of freedom.
double fisher_combine(std::span<const double> p_values);

struct NormalityBin {
  double phase_center = 0.0;
  std::size_t count = 0;
  double variance = 0.0;
  double skewness = 0.0;
  double kurtosis_excess = 0.0;
  TestResult jb;
  TestResult sw;
  bool reject_jb = false;
  bool reject_sw = false;
};

struct NormalityConfig {
  std::size_t bin_size = 10000;
  // Overall rejection also triggers when more than this fraction of bins
  // rejects under either test.
  double reject_fraction = 0.2;
};

struct NormalityReport {
  std::vector<NormalityBin> bins;  // ordered by phase within each (bs_angle, mode) group
  std::size_t rejected_jb = 0;
  std::size_t rejected_sw = 0;
  std::size_t rejected_either = 0;
  std::size_t rejected_both = 0;
  bool gaussian = true;
  std::vector<std::string> warnings;
};

// Sorts each (bs_angle, mode) group by phase and cuts it into consecutive
// chunks of `bin_size` samples; a short tail is folded into the last chunk.
NormalityReport normality_report(const HomodyneDataset& dataset, const NormalityConfig& config = {});

}  // namespace gausstomo
