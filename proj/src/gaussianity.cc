#include "gausstomo/gaussianity.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <unordered_map>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "gausstomo/errors.h"

namespace gausstomo {
namespace {

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

struct Moments {
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
};

Moments moments(std::span<const double> x) {
  const double mu = mean_of(x);
  Moments m;
  for (double v : x) {
    const double d = v - mu;
    const double d2 = d * d;
    m.m2 += d2;
    m.m3 += d2 * d;
    m.m4 += d2 * d2;
  }
  const double n = static_cast<double>(x.size());
  m.m2 /= n;
  m.m3 /= n;
  m.m4 /= n;
  return m;
}

void require_spread(std::span<const double> x, const Moments& m) {
  const double scale = std::max(std::abs(mean_of(x)), 1.0);
  if (!(m.m2 > 1e-28 * scale * scale)) throw DomainError("sample has zero variance");
}

double poly(const double* c, int order, double x) {
  double r = c[order - 1];
  for (int i = order - 2; i >= 0; --i) r = r * x + c[i];
  return r;
}

// Antisymmetric Shapiro-Wilk coefficients a_1..a_{n/2} (for the largest
// order statistics), Royston (1992) approximation.
std::vector<double> sw_coefficients(std::size_t n) {
  static const double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static const double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  const boost::math::normal normal;
  const std::size_t half = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> m(half);
  double summ2 = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    m[i] = boost::math::quantile(normal, (static_cast<double>(i + 1) - 0.375) / (an + 0.25));
    summ2 += m[i] * m[i];
  }
  summ2 *= 2.0;
  const double ssumm2 = std::sqrt(summ2);
  const double rsn = 1.0 / std::sqrt(an);
  const double a1 = poly(c1, 6, rsn) - m[0] / ssumm2;

  std::vector<double> a(half);
  std::size_t first;
  double fac;
  if (n > 5) {
    first = 2;
    const double a2 = -m[1] / ssumm2 + poly(c2, 6, rsn);
    fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
    a[1] = a2;
  } else {
    first = 1;
    fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
  }
  a[0] = a1;
  for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  return a;
}

const std::vector<double>& cached_coefficients(std::size_t n) {
  static std::mutex mutex;
  static std::unordered_map<std::size_t, std::vector<double>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, sw_coefficients(n)).first;
  return it->second;
}

double sw_p_value(double w, std::size_t n) {
  static const double g[] = {-2.273, 0.459};
  static const double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static const double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static const double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static const double c6[] = {-0.4803, -0.082676, 0.0030302};
  const double an = static_cast<double>(n);
  const double w1 = std::log1p(-w);
  double y;
  double mean;
  double sd;
  if (n <= 11) {
    const double gamma = poly(g, 2, an);
    if (w1 >= gamma) return 1e-99;
    y = -std::log(gamma - w1);
    mean = poly(c3, 4, an);
    sd = std::exp(poly(c4, 4, an));
  } else {
    const double xx = std::log(an);
    y = w1;
    mean = poly(c5, 4, xx);
    sd = std::exp(poly(c6, 3, xx));
  }
  return boost::math::cdf(boost::math::complement(boost::math::normal(mean, sd), y));
}

}  // namespace

double central_moment(std::span<const double> sample, int k) {
  if (sample.empty()) throw DomainError("empty sample");
  if (k < 0) throw DomainError("moment order must be non-negative");
  const double mu = mean_of(sample);
  double total = 0.0;
  for (double v : sample) total += std::pow(v - mu, k);
  return total / static_cast<double>(sample.size());
}

double skewness(std::span<const double> sample) {
  if (sample.size() < 4) throw DomainError("skewness needs at least 4 samples");
  const Moments m = moments(sample);
  require_spread(sample, m);
  return m.m3 / std::pow(m.m2, 1.5);
}

double kurtosis_excess(std::span<const double> sample) {
  if (sample.size() < 4) throw DomainError("kurtosis needs at least 4 samples");
  const Moments m = moments(sample);
  require_spread(sample, m);
  return m.m4 / (m.m2 * m.m2) - 3.0;
}

double chi2_2_survival(double w) { return std::exp(-0.5 * std::max(w, 0.0)); }

TestResult jarque_bera(std::span<const double> sample) {
  if (sample.size() < 4) throw DomainError("Jarque-Bera needs at least 4 samples");
  const Moments m = moments(sample);
  require_spread(sample, m);
  const double s = m.m3 / std::pow(m.m2, 1.5);
  const double k = m.m4 / (m.m2 * m.m2) - 3.0;
  const double w = static_cast<double>(sample.size()) / 6.0 * (s * s + 0.25 * k * k);
  return {w, chi2_2_survival(w)};
}

TestResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < kShapiroWilkMinSize || n > kShapiroWilkMaxSize) {
    throw DomainError("Shapiro-Wilk supports 8 <= n <= 5000, got " + std::to_string(n));
  }
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 0.0)) throw DomainError("Shapiro-Wilk sample consists of ties only");
  // Scale by the range for numerical stability; W is scale-free.
  const double mu = mean_of(x);
  double ss = 0.0;
  for (double& v : x) {
    v = (v - mu) / range;
    ss += v * v;
  }
  const auto& a = cached_coefficients(n);
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num += a[i] * (x[n - 1 - i] - x[i]);
  const double w = std::min(1.0, num * num / ss);
  return {w, std::clamp(sw_p_value(w, n), 0.0, 1.0)};
}

double fisher_combine(std::span<const double> p_values) {
  if (p_values.empty()) throw DomainError("nothing to combine");
  double stat = 0.0;
  for (double p : p_values) stat += -2.0 * std::log(std::max(p, 1e-300));
  const boost::math::chi_squared dist(2.0 * static_cast<double>(p_values.size()));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

TestResult shapiro_wilk_split(std::span<const double> sample) {
  if (sample.size() <= kShapiroWilkMaxSize) return shapiro_wilk(sample);
  const std::size_t parts = (sample.size() + kShapiroWilkMaxSize - 1) / kShapiroWilkMaxSize;
  std::vector<double> p_values;
  double w_sum = 0.0;
  for (std::size_t part = 0; part < parts; ++part) {
    std::vector<double> chunk;
    for (std::size_t i = part; i < sample.size(); i += parts) chunk.push_back(sample[i]);
    const TestResult r = shapiro_wilk(chunk);
    p_values.push_back(r.p_value);
    w_sum += r.statistic;
  }
  return {w_sum / static_cast<double>(parts), fisher_combine(p_values)};
}

NormalityReport normality_report(const HomodyneDataset& dataset, const NormalityConfig& config) {
  if (config.bin_size < kShapiroWilkMinSize) throw DomainError("normality bins need at least 8 samples");
  if (dataset.size() < kShapiroWilkMinSize) throw DomainError("dataset too small for normality tests");

  NormalityReport report;
  std::map<std::pair<double, ModeSelector>, std::vector<const HomodyneSample*>> groups;
  for (const auto& s : dataset.samples()) groups[{s.bs_angle, s.mode}].push_back(&s);

  for (auto& [key, members] : groups) {
    std::stable_sort(members.begin(), members.end(),
                     [](const HomodyneSample* a, const HomodyneSample* b) { return a->phase < b->phase; });
    if (members.size() < config.bin_size) {
      report.warnings.push_back("bin size " + std::to_string(config.bin_size) + " exceeds the " +
                                std::to_string(members.size()) + " samples of a setting group; using one bin");
    }
    std::size_t chunks = std::max<std::size_t>(1, members.size() / config.bin_size);
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t begin = c * config.bin_size;
      const std::size_t end = c + 1 == chunks ? members.size() : begin + config.bin_size;
      if (end - begin < kShapiroWilkMinSize) continue;
      std::vector<double> values;
      double phase_sum = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        values.push_back(members[i]->value);
        phase_sum += members[i]->phase;
      }
      NormalityBin bin;
      bin.phase_center = phase_sum / static_cast<double>(values.size());
      bin.count = values.size();
      const Moments m = moments(values);
      require_spread(values, m);
      bin.variance = m.m2;
      bin.skewness = m.m3 / std::pow(m.m2, 1.5);
      bin.kurtosis_excess = m.m4 / (m.m2 * m.m2) - 3.0;
      bin.jb = jarque_bera(values);
      bin.sw = shapiro_wilk_split(values);
      bin.reject_jb = bin.jb.statistic > kJarqueBeraThreshold;
      bin.reject_sw = bin.sw.p_value <= kSignificance;
      report.rejected_jb += bin.reject_jb;
      report.rejected_sw += bin.reject_sw;
      report.rejected_either += bin.reject_jb || bin.reject_sw;
      report.rejected_both += bin.reject_jb && bin.reject_sw;
      report.bins.push_back(bin);
    }
  }
  const double fraction =
      report.bins.empty() ? 0.0 : static_cast<double>(report.rejected_either) / static_cast<double>(report.bins.size());
  report.gaussian = report.rejected_both == 0 && fraction <= config.reject_fraction;
  return report;
}

}  // namespace gausstomo
