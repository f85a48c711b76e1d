#include "gausstomo/homodyne_data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <numbers>
#include <sstream>
#include <system_error>
#include <tuple>

#include "gausstomo/errors.h"

namespace gausstomo {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_efficiency(double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw DomainError("efficiency must lie in (0, 1], got " + std::to_string(eta));
  }
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view field, std::size_t line, const char* name) {
  field = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(std::string("invalid ") + name + " '" + std::string(field) + "'", line);
  }
  if (!std::isfinite(v)) throw ParseError(std::string("non-finite ") + name, line);
  return v;
}

void check_physical_state(const CovarianceMatrix& g) {
  if (!check_physical(g).physical) {
    throw DomainError("covariance matrix violates the uncertainty relation");
  }
}

}  // namespace

HomodyneDataset::HomodyneDataset(std::vector<HomodyneSample> samples, double efficiency, int mode_count,
                                 std::string metadata)
    : samples_(std::move(samples)), efficiency_(efficiency), mode_count_(mode_count), metadata_(std::move(metadata)) {
  require_efficiency(efficiency);
  if (mode_count != 1 && mode_count != 2) {
    throw DimensionError("dataset mode count must be 1 or 2");
  }
  for (auto& s : samples_) {
    if (!std::isfinite(s.phase) || !std::isfinite(s.value) || !std::isfinite(s.bs_angle)) {
      throw DomainError("dataset contains non-finite samples");
    }
    s.phase = wrap_phase(s.phase);
    if (mode_count == 1) {
      s.bs_angle = 0.0;
      s.mode = ModeSelector::kFirst;
    }
  }
}

double efficiency_noise_variance(double eta) {
  require_efficiency(eta);
  return (1.0 - eta) / (2.0 * eta);
}

double wrap_phase(double phase) {
  double p = std::fmod(phase, kTwoPi);
  if (p < 0.0) p += kTwoPi;
  if (p >= kTwoPi) p = 0.0;
  return p;
}

double NormalSampler::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double NormalSampler::standard() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double angle = kTwoPi * uniform();
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

HomodyneDataset synthesize(const CovarianceMatrix& g, const DisplacementVector& mean, double eta,
                           std::span<const SettingRequest> settings, std::uint64_t seed) {
  check_physical_state(g);
  const double noise = efficiency_noise_variance(eta);
  if (mean.mode_count() != g.mode_count()) throw DimensionError("mean and covariance mode counts differ");

  std::size_t total = 0;
  for (const auto& req : settings) {
    if (req.count == 0) throw DomainError("every setting needs at least one sample");
    total += req.count;
  }
  NormalSampler rng(seed);
  std::vector<HomodyneSample> samples;
  samples.reserve(total);
  for (const auto& req : settings) {
    const auto w = ProjectionVector::for_setting(req.setting, g.mode_count());
    const double mu = w.entries().dot(mean.entries());
    const double sigma = std::sqrt(project_variance(g, w) + noise);
    for (std::size_t k = 0; k < req.count; ++k) {
      samples.push_back({req.setting.phase, req.setting.bs_angle, req.setting.mode, mu + sigma * rng.standard()});
    }
  }
  return HomodyneDataset(std::move(samples), eta, g.mode_count(), "seed=" + std::to_string(seed));
}

HomodyneDataset synthesize_scan(const CovarianceMatrix& g, const DisplacementVector& mean, double eta,
                                std::size_t total, std::uint64_t seed) {
  check_physical_state(g);
  if (g.mode_count() != 1) throw DimensionError("phase scan synthesis is single-mode");
  const double noise = efficiency_noise_variance(eta);
  NormalSampler rng(seed);
  std::vector<HomodyneSample> samples;
  samples.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    const double phase = kTwoPi * rng.uniform();
    const auto w = ProjectionVector::for_setting({phase, 0.0, ModeSelector::kFirst}, 1);
    const double sigma = std::sqrt(project_variance(g, w) + noise);
    samples.push_back({phase, 0.0, ModeSelector::kFirst, w.entries().dot(mean.entries()) + sigma * rng.standard()});
  }
  return HomodyneDataset(std::move(samples), eta, 1, "scan seed=" + std::to_string(seed));
}

HomodyneDataset synthesize_mixture(const CovarianceMatrix& g, double eta, std::span<const SettingRequest> settings,
                                   double weight, double variance_scale, std::uint64_t seed) {
  if (!(weight >= 0.0 && weight <= 1.0) || !(variance_scale > 0.0)) {
    throw DomainError("mixture weight must be in [0, 1] and variance scale positive");
  }
  const double noise = efficiency_noise_variance(eta);
  NormalSampler rng(seed);
  std::vector<HomodyneSample> samples;
  for (const auto& req : settings) {
    const auto w = ProjectionVector::for_setting(req.setting, g.mode_count());
    const double var = project_variance(g, w) + noise;
    const double narrow = std::sqrt(var);
    const double wide = std::sqrt(var * variance_scale);
    for (std::size_t k = 0; k < req.count; ++k) {
      const double sigma = rng.uniform() < weight ? wide : narrow;
      samples.push_back({req.setting.phase, req.setting.bs_angle, req.setting.mode, sigma * rng.standard()});
    }
  }
  return HomodyneDataset(std::move(samples), eta, g.mode_count(), "mixture fixture seed=" + std::to_string(seed));
}

std::vector<SettingRequest> uniform_phase_settings(int phase_count, std::size_t count, double bs_angle,
                                                   ModeSelector mode) {
  if (phase_count < 1) throw DomainError("phase count must be positive");
  std::vector<SettingRequest> out;
  for (int k = 0; k < phase_count; ++k) {
    out.push_back({{kTwoPi * (k + 0.5) / phase_count, bs_angle, mode}, count});
  }
  return out;
}

std::vector<SettingRequest> two_mode_settings(int phase_count, std::size_t count) {
  auto out = uniform_phase_settings(phase_count, count, 0.0, ModeSelector::kFirst);
  for (const auto& extra : {uniform_phase_settings(phase_count, count, 0.0, ModeSelector::kSecond),
                            uniform_phase_settings(phase_count, count, std::numbers::pi / 4, ModeSelector::kFirst)}) {
    out.insert(out.end(), extra.begin(), extra.end());
  }
  return out;
}

std::string format_csv(const HomodyneDataset& dataset) {
  std::string out;
  out.reserve(dataset.size() * 48 + 128);
  out += "# eta=" + format_double(dataset.efficiency()) + "\n";
  out += "# modes=" + std::to_string(dataset.mode_count()) + "\n";
  std::istringstream meta(dataset.metadata());
  for (std::string line; std::getline(meta, line);) out += "# meta: " + line + "\n";
  out += "phase,bs_angle,mode,value\n";
  for (const auto& s : dataset.samples()) {
    out += format_double(s.phase);
    out += ',';
    out += format_double(s.bs_angle);
    out += ',';
    out += s.mode == ModeSelector::kFirst ? '1' : '2';
    out += ',';
    out += format_double(s.value);
    out += '\n';
  }
  return out;
}

void save_csv(const HomodyneDataset& dataset, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << format_csv(dataset);
  if (!os) throw Error("failed writing " + path.string());
}

HomodyneDataset parse_csv(const std::string& text) {
  std::optional<double> eta;
  std::optional<int> modes;
  std::string metadata;
  std::vector<HomodyneSample> samples;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find('\n', pos);
    if (next == std::string::npos) next = text.size();
    std::string_view line = trim(std::string_view(text).substr(pos, next - pos));
    pos = next + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body = trim(line.substr(1));
      if (body.starts_with("meta:")) {
        if (!metadata.empty()) metadata += '\n';
        metadata += std::string(trim(body.substr(5)));
      } else if (body.starts_with("eta=")) {
        eta = parse_double(body.substr(4), line_no, "eta");
      } else if (body.starts_with("modes=")) {
        const double m = parse_double(body.substr(6), line_no, "modes");
        if (m != 1.0 && m != 2.0) throw ParseError("modes must be 1 or 2", line_no);
        modes = static_cast<int>(m);
      }
      continue;
    }
    if (line.starts_with("phase")) continue;  // column header

    std::string_view fields[4];
    std::size_t field = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (field == 4) throw ParseError("expected 4 columns", line_no);
        fields[field++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (field != 4) throw ParseError("expected 4 columns, found " + std::to_string(field), line_no);
    HomodyneSample s;
    s.phase = parse_double(fields[0], line_no, "phase");
    s.bs_angle = parse_double(fields[1], line_no, "bs_angle");
    const std::string_view mode = trim(fields[2]);
    if (mode == "1") {
      s.mode = ModeSelector::kFirst;
    } else if (mode == "2") {
      s.mode = ModeSelector::kSecond;
    } else {
      throw ParseError("mode must be 1 or 2, got '" + std::string(mode) + "'", line_no);
    }
    s.value = parse_double(fields[3], line_no, "value");
    samples.push_back(s);
  }
  if (!eta) throw ParseError("missing '# eta=<float>' header");
  if (!modes) throw ParseError("missing '# modes=<int>' header");
  if (!(*eta > 0.0 && *eta <= 1.0)) throw ParseError("eta must lie in (0, 1]");
  return HomodyneDataset(std::move(samples), *eta, *modes, std::move(metadata));
}

HomodyneDataset load_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << is.rdbuf();
  try {
    return parse_csv(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::size_t BinnedStats::total_count() const {
  std::size_t n = 0;
  for (const auto& b : bins) n += b.count;
  return n;
}

BinnedStats bin_by_phase(const HomodyneDataset& dataset, int n_bins) {
  if (n_bins < 3) throw DomainError("at least 3 phase bins are needed");
  if (dataset.empty()) throw DomainError("cannot bin an empty dataset");

  using GroupKey = std::pair<double, ModeSelector>;
  std::map<GroupKey, std::vector<BinRecord>> groups;
  auto bin_index = [n_bins](double phase) {
    const int idx = static_cast<int>(std::floor(phase / kTwoPi * n_bins));
    return std::clamp(idx, 0, n_bins - 1);
  };
  auto group_for = [&](const HomodyneSample& s) -> std::vector<BinRecord>& {
    auto [it, inserted] = groups.try_emplace({s.bs_angle, s.mode});
    if (inserted) {
      it->second.resize(static_cast<std::size_t>(n_bins));
      for (int k = 0; k < n_bins; ++k) {
        it->second[k].setting = {kTwoPi * (k + 0.5) / n_bins, s.bs_angle, s.mode};
      }
    }
    return it->second;
  };

  for (const auto& s : dataset.samples()) {
    BinRecord& b = group_for(s)[bin_index(s.phase)];
    ++b.count;
    b.sum += s.value;
    b.sum_sq += s.value * s.value;
  }
  for (const auto& s : dataset.samples()) {
    BinRecord& b = group_for(s)[bin_index(s.phase)];
    const double d = s.value - b.mean();
    b.centered_sum_sq += d * d;
  }

  BinnedStats stats;
  stats.mode_count = dataset.mode_count();
  for (auto& [key, records] : groups) {
    for (auto& r : records) {
      if (r.count == 0) {
        ++stats.dropped_bins;
        continue;
      }
      stats.bins.push_back(r);
    }
  }
  std::sort(stats.bins.begin(), stats.bins.end(),
            [](const BinRecord& a, const BinRecord& b) {
              return std::tie(a.setting.bs_angle, a.setting.mode, a.setting.phase) <
                     std::tie(b.setting.bs_angle, b.setting.mode, b.setting.phase);
            });
  if (stats.dropped_bins > 0) {
    stats.warnings.push_back(std::to_string(stats.dropped_bins) + " empty phase bin(s) dropped");
  }
  return stats;
}

}  // namespace gausstomo
