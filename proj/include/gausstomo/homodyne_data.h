#pragma once

// Phase-tagged homodyne samples, synthetic data and per-setting statistics.
//
// Sample values are stored efficiency-rescaled (raw outcome / sqrt(eta)), so a
// Gaussian state with covariance G and mean m produces, for projection vector
// w, outcomes distributed as N(w^T m, w^T G w + (1 - eta) / (2 eta)).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gausstomo/gaussian_core.h"

namespace gausstomo {

struct HomodyneSample {
  double phase = 0.0;     // radians, reduced to [0, 2 pi)
  double bs_angle = 0.0;  // 0 for uncoupled detection, pi/4 for the balanced splitter
  ModeSelector mode = ModeSelector::kFirst;
  double value = 0.0;

  Setting setting() const { return {phase, bs_angle, mode}; }
  bool operator==(const HomodyneSample&) const = default;
};

class HomodyneDataset {
 public:
  HomodyneDataset(std::vector<HomodyneSample> samples, double efficiency, int mode_count,
                  std::string metadata = {});

  const std::vector<HomodyneSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  double efficiency() const { return efficiency_; }
  int mode_count() const { return mode_count_; }
  const std::string& metadata() const { return metadata_; }

  bool operator==(const HomodyneDataset&) const = default;

 private:
  std::vector<HomodyneSample> samples_;
  double efficiency_;
  int mode_count_;
  std::string metadata_;
};

// Added noise variance (1 - eta) / (2 eta) of an inefficient detector in
// rescaled units. Throws DomainError unless 0 < eta <= 1.
double efficiency_noise_variance(double eta);

// Reduces an angle to [0, 2 pi).
double wrap_phase(double phase);

// mt19937_64 feeding a Box-Muller transform. Both pieces are fully specified,
// so a seed reproduces the same variates on every platform.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  double uniform();   // (0, 1), 53-bit resolution
  double standard();  // N(0, 1)

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct SettingRequest {
  Setting setting;
  std::size_t count = 0;
};

// Draws `count` samples per setting from N(w^T mean, w^T G w + delta_eta^2).
HomodyneDataset synthesize(const CovarianceMatrix& g, const DisplacementVector& mean, double eta,
                           std::span<const SettingRequest> settings, std::uint64_t seed);

// Single-mode scan with phases drawn uniformly on [0, 2 pi), as produced by a
// linear piezo ramp with random sampling instants.
HomodyneDataset synthesize_scan(const CovarianceMatrix& g, const DisplacementVector& mean, double eta,
                                std::size_t total, std::uint64_t seed);

// Test fixture, not a physical model: each sample comes from the Gaussian of
// `g` with probability 1 - weight, otherwise from a component whose variance
// is `variance_scale` times larger. Produces heavy tails at every phase.
HomodyneDataset synthesize_mixture(const CovarianceMatrix& g, double eta, std::span<const SettingRequest> settings,
                                   double weight, double variance_scale, std::uint64_t seed);

// `count` samples at each of `phase_count` equally spaced phases
// 2 pi (k + 1/2) / phase_count.
std::vector<SettingRequest> uniform_phase_settings(int phase_count, std::size_t count, double bs_angle = 0.0,
                                                   ModeSelector mode = ModeSelector::kFirst);

// Uncoupled detection of both ports plus balanced-splitter detection of port 1.
std::vector<SettingRequest> two_mode_settings(int phase_count, std::size_t count);

// CSV format: `# eta=<float>` and `# modes=<int>` header lines (both required),
// optional `# meta: <text>` lines, an optional `phase,bs_angle,mode,value`
// column header, then one sample per row with mode in {1, 2}.
HomodyneDataset load_csv(const std::filesystem::path& path);
HomodyneDataset parse_csv(const std::string& text);
void save_csv(const HomodyneDataset& dataset, const std::filesystem::path& path);
std::string format_csv(const HomodyneDataset& dataset);

struct BinRecord {
  Setting setting;                // phase = bin midpoint
  std::size_t count = 0;
  double sum = 0.0;               // sum of x
  double sum_sq = 0.0;            // y_h = sum of x^2
  double centered_sum_sq = 0.0;   // sum of (x - mean)^2

  double mean() const { return sum / static_cast<double>(count); }
};

struct BinnedStats {
  int mode_count = 1;
  std::vector<BinRecord> bins;  // sorted by (bs_angle, mode, phase)
  std::size_t dropped_bins = 0;
  std::vector<std::string> warnings;

  std::size_t total_count() const;
};

// Splits [0, 2 pi) into `n_bins` equal intervals separately for every
// (bs_angle, mode) group. Empty bins are dropped with a warning.
BinnedStats bin_by_phase(const HomodyneDataset& dataset, int n_bins);

}  // namespace gausstomo
