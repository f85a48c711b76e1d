#include "gausstomo/cli.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gausstomo/errors.h"
#include "gausstomo/fock_mle.h"
#include "gausstomo/gaussian_core.h"
#include "gausstomo/gaussian_mle.h"
#include "gausstomo/gaussianity.h"
#include "gausstomo/homodyne_data.h"
#include "gausstomo/json_io.h"

namespace gausstomo::cli {
namespace {

namespace fs = std::filesystem;

// Raised for bad parameter values found after parsing.
struct ValidationError : Error {
  using Error::Error;
};

struct Global {
  std::uint64_t seed = 1;
  std::string out = ".";
  std::optional<double> eta;
};

struct SimulateArgs {
  std::string state = "vacuum";
  int phases = 31;
  std::size_t per_bin = 10000;
  std::size_t scan = 0;
  bool two_mode = false;
  std::vector<double> mean;
  double mix_weight = 0.3;
  double mix_scale = 6.0;
  std::string output = "samples.csv";
};

struct FitGaussianArgs {
  std::string data;
  int bins = 31;
  int max_iterations = 10000;
  double tolerance = 1e-10;
  bool project = false;
  std::string moment = "centered";
  std::size_t min_bin_count = 10;
  std::string output = "gaussian_report.json";
};

struct FitFockArgs {
  std::string data;
  int dim = 25;
  int phase_bins = 31;
  int quad_bins = 31;
  int max_iterations = 5000;
  double tolerance = 1e-9;
  bool no_efficiency = false;
  double grid_extent = 4.0;
  int grid_points = 81;
};

struct NormtestArgs {
  std::string data;
  std::size_t bin_size = 10000;
  double reject_fraction = 0.2;
};

struct CompareArgs {
  std::vector<std::string> gaussian;
  std::vector<std::string> fock;
  std::vector<std::string> fock_pair;
  std::string output = "compare.json";
};

struct FiguresArgs {
  std::string data;
  std::vector<int> dims = {8, 12, 16, 20, 25, 30};
  int bins = 31;
  int phase_bins = 31;
  int quad_bins = 31;
  std::size_t bin_size = 10000;
  double grid_extent = 4.0;
  int grid_points = 81;
};

std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

fs::path output_path(const Global& g, const std::string& name) {
  const fs::path dir(g.out);
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << text;
}

Json global_json(const Global& g) {
  Json j;
  j["seed"] = g.seed;
  j["out"] = g.out;
  if (g.eta) j["eta"] = *g.eta; else j["eta"] = nullptr;
  return j;
}

HomodyneDataset load_dataset(const std::string& path) {
  require(!path.empty(), "a dataset path is required");
  require(fs::exists(path), "dataset not found: " + path);
  return load_csv(path);
}

double resolved_eta(const Global& g, const HomodyneDataset& data, std::vector<std::string>& notes) {
  if (!g.eta) return data.efficiency();
  efficiency_noise_variance(*g.eta);
  if (*g.eta != data.efficiency()) {
    notes.push_back("--eta " + num(*g.eta) + " overrides the dataset efficiency " + num(data.efficiency()));
  }
  return *g.eta;
}

std::vector<std::array<double, 2>> square_grid(double extent, int points) {
  std::vector<std::array<double, 2>> grid;
  grid.reserve(static_cast<std::size_t>(points) * static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    for (int j = 0; j < points; ++j) {
      const double x = -extent + 2.0 * extent * i / (points - 1);
      const double y = -extent + 2.0 * extent * j / (points - 1);
      grid.push_back({x, y});
    }
  }
  return grid;
}

std::string grid_csv(const std::vector<std::array<double, 2>>& grid, const std::vector<double>& w) {
  std::ostringstream os;
  os << "x,y,w\n";
  for (std::size_t i = 0; i < grid.size(); ++i) os << num(grid[i][0]) << ',' << num(grid[i][1]) << ',' << num(w[i]) << '\n';
  return os.str();
}

// ---- simulate -------------------------------------------------------------

int cmd_simulate(const Global& g, const SimulateArgs& a, std::ostream& out) {
  require(g.eta.has_value(), "simulate requires --eta");
  efficiency_noise_variance(*g.eta);
  require(a.phases >= 1, "--phases must be positive");
  require(a.per_bin >= 1, "--per-bin must be positive");

  CovarianceMatrix cov = CovarianceMatrix::vacuum(a.two_mode ? 2 : 1);
  bool mixture = false;
  if (a.state == "vacuum") {
  } else if (a.state == "mixture") {
    require(!a.two_mode, "the mixture fixture is single-mode");
    require(a.mix_weight >= 0.0 && a.mix_weight <= 1.0, "--mix-weight must lie in [0, 1]");
    require(a.mix_scale > 0.0, "--mix-scale must be positive");
    mixture = true;
  } else if (a.state.rfind("file:", 0) == 0) {
    cov = load_covariance(a.state.substr(5));
  } else {
    throw ValidationError("--state must be vacuum, mixture or file:<path>");
  }
  const int modes = cov.mode_count();
  const PhysicalityReport phys = check_physical(cov);
  if (!phys.physical) {
    throw DomainError("covariance is unphysical (min symplectic eigenvalue " + num(phys.min_symplectic_eigenvalue) +
                      " < 0.5); nothing written");
  }
  DisplacementVector mean = DisplacementVector::zero(modes);
  if (!a.mean.empty()) {
    require(static_cast<int>(a.mean.size()) == 2 * modes, "--mean needs " + std::to_string(2 * modes) + " values");
    mean = DisplacementVector(Eigen::Map<const Vector>(a.mean.data(), static_cast<Eigen::Index>(a.mean.size())));
  }
  require(a.scan == 0 || modes == 1, "--scan is single-mode only");
  require(!(mixture && a.scan > 0), "--scan cannot be combined with the mixture fixture");

  const auto settings = modes == 2 ? two_mode_settings(a.phases, a.per_bin)
                                   : uniform_phase_settings(a.phases, a.per_bin);
  HomodyneDataset raw = mixture    ? synthesize_mixture(cov, *g.eta, settings, a.mix_weight, a.mix_scale, g.seed)
                        : a.scan > 0 ? synthesize_scan(cov, mean, *g.eta, a.scan, g.seed)
                                     : synthesize(cov, mean, *g.eta, settings, g.seed);

  std::ostringstream meta;
  meta << raw.metadata() << "; command=simulate state=" << a.state << " eta=" << num(*g.eta)
       << " phases=" << a.phases << " per_bin=" << a.per_bin << " scan=" << a.scan
       << " two_mode=" << (modes == 2 ? 1 : 0);
  if (mixture) meta << " mix_weight=" << num(a.mix_weight) << " mix_scale=" << num(a.mix_scale);
  meta << " mean=";
  for (Eigen::Index i = 0; i < mean.entries().size(); ++i) meta << (i ? "," : "") << num(mean.entries()(i));
  const HomodyneDataset data(raw.samples(), raw.efficiency(), raw.mode_count(), meta.str());

  const fs::path path = output_path(g, a.output);
  save_csv(data, path);

  const BinnedStats stats = bin_by_phase(data, a.phases);
  out << "wrote " << data.size() << " samples to " << path.string() << "\n";
  out << "bs_angle,mode,phase,count,variance\n";
  for (const auto& b : stats.bins) {
    out << num(b.setting.bs_angle) << ',' << static_cast<int>(b.setting.mode) << ',' << num(b.setting.phase) << ','
        << b.count << ',' << num(b.count > 0 ? b.centered_sum_sq / static_cast<double>(b.count) : 0.0) << '\n';
  }
  return kExitOk;
}

// ---- fit-gaussian ----------------------------------------------------------

EstimatorConfig estimator_config(const FitGaussianArgs& a) {
  require(a.bins >= 3, "--bins must be at least 3");
  require(a.max_iterations >= 1, "--max-iter must be positive");
  require(a.tolerance > 0.0, "--tol must be positive");
  require(a.moment == "centered" || a.moment == "raw", "--moment must be centered or raw");
  EstimatorConfig config;
  config.max_iterations = a.max_iterations;
  config.residual_tolerance = a.tolerance;
  config.project_unphysical = a.project;
  config.moment = a.moment == "raw" ? SecondMoment::kRaw : SecondMoment::kCentered;
  config.min_bin_count = a.min_bin_count;
  return config;
}

Json fit_gaussian_config(const Global& g, const FitGaussianArgs& a, double eta) {
  Json c;
  c["command"] = "fit-gaussian";
  c["global"] = global_json(g);
  c["data"] = a.data;
  c["eta"] = eta;
  c["bins"] = a.bins;
  c["max_iterations"] = a.max_iterations;
  c["residual_tolerance"] = a.tolerance;
  c["project_unphysical"] = a.project;
  c["moment"] = a.moment;
  c["min_bin_count"] = a.min_bin_count;
  return c;
}

EstimatorReport fit_gaussian(const HomodyneDataset& data, double eta, int bins, const EstimatorConfig& config) {
  const BinnedStats stats = bin_by_phase(data, bins);
  return data.mode_count() == 2 ? estimate_two_mode(stats, eta, config) : estimate(stats, eta, config);
}

int cmd_fit_gaussian(const Global& g, const FitGaussianArgs& a, std::ostream& out, std::ostream& err) {
  const EstimatorConfig config = estimator_config(a);
  const HomodyneDataset data = load_dataset(a.data);
  std::vector<std::string> notes;
  const double eta = resolved_eta(g, data, notes);

  EstimatorReport report;
  try {
    report = fit_gaussian(data, eta, a.bins, config);
  } catch (const IllPosedError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  report.warnings.insert(report.warnings.begin(), notes.begin(), notes.end());

  Json j;
  j["config"] = fit_gaussian_config(g, a, eta);
  j["dataset"] = Json{{"samples", data.size()}, {"modes", data.mode_count()}, {"metadata", data.metadata()}};
  j["report"] = to_json(report);
  const fs::path path = output_path(g, a.output);
  write_json(j, path);

  out << "estimate (" << (report.converged ? "converged" : "not converged") << " after " << report.iterations
      << " iterations, residual " << num(report.final_residual) << "):\n";
  const Matrix& e = report.estimate.entries();
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index k = 0; k < e.cols(); ++k) out << (k ? " " : "  ") << num(e(i, k));
    out << '\n';
  }
  out << "physical: " << (report.physicality.physical ? "true" : "false")
      << " (min symplectic eigenvalue " << num(report.physicality.min_symplectic_eigenvalue) << ")\n";
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  out << "wrote " << path.string() << '\n';
  // An unphysical estimate is reported as a warning only.
  return report.converged ? kExitOk : kExitNumerical;
}

// ---- fit-fock --------------------------------------------------------------

struct FockRun {
  FockReport report;
  FockMoments moments;
};

PovmConfig povm_config(int dim, int phase_bins, int quad_bins, bool efficiency) {
  require(dim >= 2 && dim <= kMaxFockDimension, "--dim must lie in [2, " + std::to_string(kMaxFockDimension) + "]");
  require(phase_bins >= 1, "--phase-bins must be positive");
  require(quad_bins >= 3, "--quad-bins must be at least 3");
  PovmConfig c;
  c.dim = dim;
  c.phase_bins = phase_bins;
  c.quadrature_bins = quad_bins;
  c.include_efficiency = efficiency;
  return c;
}

FockRun fit_fock(const HomodyneDataset& data, const PovmConfig& pc, const FockConfig& fc) {
  require(data.mode_count() == 1, "Fock reconstruction is single-mode only");
  FockRun run;
  run.report = ml_reconstruct(build_povm(data, pc), fc);
  run.moments = covariance_from_rho(run.report.rho);
  return run;
}

Json fock_json(const FockRun& run) {
  Json j;
  j["iterations"] = run.report.iterations;
  j["converged"] = run.report.converged;
  j["max_relative_deviation"] = run.report.max_relative_deviation;
  j["log_likelihood_trace"] = run.report.log_likelihood_trace;
  j["covariance"] = to_json(run.moments.covariance);
  j["displacement"] = to_json(run.moments.mean);
  j["top_population"] = run.moments.top_population;
  std::vector<std::string> warnings = run.report.warnings;
  warnings.insert(warnings.end(), run.moments.warnings.begin(), run.moments.warnings.end());
  j["warnings"] = warnings;
  return j;
}

int cmd_fit_fock(const Global& g, const FitFockArgs& a, std::ostream& out, std::ostream& err) {
  const PovmConfig pc = povm_config(a.dim, a.phase_bins, a.quad_bins, !a.no_efficiency);
  require(a.max_iterations >= 1, "--max-iter must be positive");
  require(a.tolerance > 0.0, "--tol must be positive");
  require(a.grid_extent > 0.0 && a.grid_points >= 2, "invalid Wigner grid");
  HomodyneDataset data = load_dataset(a.data);
  std::vector<std::string> notes;
  const double eta = resolved_eta(g, data, notes);
  if (eta != data.efficiency()) data = HomodyneDataset(data.samples(), eta, data.mode_count(), data.metadata());

  FockConfig fc;
  fc.max_iterations = a.max_iterations;
  fc.tolerance = a.tolerance;
  FockRun run = fit_fock(data, pc, fc);
  run.report.warnings.insert(run.report.warnings.begin(), notes.begin(), notes.end());

  Json c;
  c["command"] = "fit-fock";
  c["global"] = global_json(g);
  c["data"] = a.data;
  c["eta"] = eta;
  c["dim"] = a.dim;
  c["phase_bins"] = a.phase_bins;
  c["quadrature_bins"] = a.quad_bins;
  c["include_efficiency"] = !a.no_efficiency;
  c["max_iterations"] = a.max_iterations;
  c["tolerance"] = a.tolerance;
  c["grid_extent"] = a.grid_extent;
  c["grid_points"] = a.grid_points;

  Json j;
  j["config"] = c;
  j["report"] = fock_json(run);
  j["rho"] = to_json(run.report.rho);
  const std::string stem = "rho_N" + std::to_string(a.dim);
  const fs::path rho_path = output_path(g, stem + ".json");
  write_json(j, rho_path);

  const auto grid = square_grid(a.grid_extent, a.grid_points);
  const fs::path wigner_path = output_path(g, "wigner_N" + std::to_string(a.dim) + ".csv");
  write_text(wigner_path, grid_csv(grid, wigner_from_rho(run.report.rho, grid)));

  out << "N=" << a.dim << ": " << (run.report.converged ? "converged" : "not converged") << " after "
      << run.report.iterations << " iterations; <0|rho|0> = " << num(run.report.rho(0, 0).real()) << '\n';
  for (const auto& w : run.report.warnings) err << "warning: " << w << '\n';
  for (const auto& w : run.moments.warnings) err << "warning: " << w << '\n';
  out << "wrote " << rho_path.string() << " and " << wigner_path.string() << '\n';
  return run.report.converged ? kExitOk : kExitNumerical;
}

// ---- normtest --------------------------------------------------------------

int cmd_normtest(const Global& g, const NormtestArgs& a, std::ostream& out, std::ostream& err) {
  require(a.bin_size >= kShapiroWilkMinSize, "--bin-size must be at least 8");
  require(a.reject_fraction >= 0.0 && a.reject_fraction <= 1.0, "--reject-fraction must lie in [0, 1]");
  const HomodyneDataset data = load_dataset(a.data);
  NormalityConfig config;
  config.bin_size = a.bin_size;
  config.reject_fraction = a.reject_fraction;
  const NormalityReport report = normality_report(data, config);

  Json c;
  c["command"] = "normtest";
  c["global"] = global_json(g);
  c["data"] = a.data;
  c["bin_size"] = a.bin_size;
  c["reject_fraction"] = a.reject_fraction;
  c["jb_threshold"] = kJarqueBeraThreshold;
  c["significance"] = kSignificance;
  Json j;
  j["config"] = c;
  j["summary"] = to_json(report);
  const fs::path json_path = output_path(g, "normality.json");
  const fs::path csv_path = output_path(g, "normality.csv");
  write_json(j, json_path);
  write_text(csv_path, normality_csv(report));

  out << report.bins.size() << " bins; rejected JB " << report.rejected_jb << ", SW " << report.rejected_sw
      << ", both " << report.rejected_both << "; verdict: " << (report.gaussian ? "gaussian" : "non-gaussian") << '\n';
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  out << "wrote " << json_path.string() << " and " << csv_path.string() << '\n';
  return kExitOk;
}

// ---- compare ---------------------------------------------------------------

struct GaussianInput {
  std::string path;
  CovarianceMatrix estimate = CovarianceMatrix::vacuum(1);
  double mean_log_density = 0.0;
  std::size_t sample_count = 0;
};

GaussianInput read_gaussian(const std::string& path) {
  require(fs::exists(path), "report not found: " + path);
  const Json j = read_json(path);
  try {
    const Json& r = j.contains("report") ? j.at("report") : j;
    return {path, covariance_from_json(r.at("covariance")), r.at("mean_log_density").get<double>(),
            r.at("sample_count").get<std::size_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

struct FockInput {
  std::string path;
  DensityMatrix rho = DensityMatrix::fock(0, 1);
  double log_likelihood = 0.0;  // per sample
};

FockInput read_fock(const std::string& path) {
  require(fs::exists(path), "density matrix not found: " + path);
  const Json j = read_json(path);
  try {
    FockInput in{path, density_from_json(j.contains("rho") ? j.at("rho") : j), 0.0};
    if (j.contains("report")) {
      const auto& trace = j.at("report").at("log_likelihood_trace");
      if (!trace.empty()) in.log_likelihood = trace.back().get<double>();
    }
    return in;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

int cmd_compare(const Global& g, const CompareArgs& a, std::ostream& out) {
  require(!a.gaussian.empty() || !a.fock.empty() || !a.fock_pair.empty(), "nothing to compare");
  require(a.gaussian.size() <= 2, "at most two Gaussian reports");
  require(a.fock_pair.empty() || a.fock_pair.size() == 2, "--fock-pair takes exactly two files");

  std::vector<GaussianInput> gauss;
  for (const auto& p : a.gaussian) gauss.push_back(read_gaussian(p));
  std::vector<FockInput> fock;
  for (const auto& p : a.fock) fock.push_back(read_fock(p));

  Json j;
  Json c;
  c["command"] = "compare";
  c["global"] = global_json(g);
  c["gaussian"] = a.gaussian;
  c["fock"] = a.fock;
  c["fock_pair"] = a.fock_pair;
  j["config"] = c;

  if (!fock.empty()) {
    std::size_t ref = 0;
    for (std::size_t i = 1; i < fock.size(); ++i) {
      if (fock[i].rho.dim() > fock[ref].rho.dim()) ref = i;
    }
    Json table = Json::array();
    out << "dim,hs_distance_to_N" << fock[ref].rho.dim() << '\n';
    for (const auto& f : fock) {
      const double d = hs_distance(f.rho, fock[ref].rho);
      table.push_back(Json{{"path", f.path}, {"dim", f.rho.dim()}, {"hs_distance", d}});
      out << f.rho.dim() << ',' << num(d) << '\n';
    }
    j["hs_distances"] = Json{{"reference", fock[ref].path}, {"rows", table}};
  }

  if (!gauss.empty() && !fock.empty()) {
    require(gauss[0].estimate.mode_count() == 1, "covariance deltas need a single-mode Gaussian report");
    Json rows = Json::array();
    for (const auto& f : fock) {
      const FockMoments m = covariance_from_rho(f.rho);
      const Matrix delta = m.covariance.entries() - gauss[0].estimate.entries();
      Json d = Json::array();
      for (int r = 0; r < 2; ++r) d.push_back(Json::array({delta(r, 0), delta(r, 1)}));
      rows.push_back(Json{{"path", f.path},
                          {"dim", f.rho.dim()},
                          {"covariance", to_json(m.covariance)},
                          {"delta", d},
                          {"max_abs_delta", delta.cwiseAbs().maxCoeff()},
                          {"warnings", m.warnings}});
      out << "N=" << f.rho.dim() << " max |G_fock - G_gauss| = " << num(delta.cwiseAbs().maxCoeff()) << '\n';
    }
    j["covariance_deltas"] = Json{{"gaussian", gauss[0].path}, {"rows", rows}};
  }

  // Per-sample log-likelihood of each dataset under its own model; the ratio
  // B/A exceeds 1 when dataset B fits its model worse.
  Json models = Json::object();
  if (!gauss.empty()) {
    Json rows = Json::array();
    for (const auto& gi : gauss) {
      rows.push_back(Json{{"path", gi.path},
                          {"sample_count", gi.sample_count},
                          {"mean_log_likelihood", gi.mean_log_density},
                          {"log_likelihood", gi.mean_log_density * static_cast<double>(gi.sample_count)}});
    }
    Json gj{{"datasets", rows}};
    if (gauss.size() == 2) {
      const double ratio = gauss[1].mean_log_density / gauss[0].mean_log_density;
      gj["degradation_factor"] = ratio;
      out << "gaussian degradation factor " << num(ratio) << '\n';
    }
    models["gaussian"] = gj;
  }
  if (!a.fock_pair.empty()) {
    const FockInput fa = read_fock(a.fock_pair[0]);
    const FockInput fb = read_fock(a.fock_pair[1]);
    require(fa.log_likelihood != 0.0, a.fock_pair[0] + " has no likelihood trace");
    const double ratio = fb.log_likelihood / fa.log_likelihood;
    models["fock"] = Json{{"datasets", Json::array({Json{{"path", fa.path}, {"mean_log_likelihood", fa.log_likelihood}},
                                                    Json{{"path", fb.path}, {"mean_log_likelihood", fb.log_likelihood}}})},
                          {"degradation_factor", ratio}};
    out << "fock degradation factor " << num(ratio) << '\n';
  }
  if (!models.empty()) j["likelihood"] = models;

  const fs::path path = output_path(g, a.output);
  write_json(j, path);
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

// ---- make-figures ----------------------------------------------------------

int cmd_make_figures(const Global& g, const FiguresArgs& a, std::ostream& out, std::ostream& err) {
  require(!a.dims.empty(), "--dims must not be empty");
  require(a.grid_extent > 0.0 && a.grid_points >= 2, "invalid Wigner grid");
  require(a.bin_size >= kShapiroWilkMinSize, "--bin-size must be at least 8");
  std::vector<int> dims = a.dims;
  std::sort(dims.begin(), dims.end());
  dims.erase(std::unique(dims.begin(), dims.end()), dims.end());
  for (int d : dims) povm_config(d, a.phase_bins, a.quad_bins, true);
  const HomodyneDataset data = load_dataset(a.data);
  require(data.mode_count() == 1, "make-figures is single-mode only");
  std::vector<std::string> notes;
  const double eta = resolved_eta(g, data, notes);
  const HomodyneDataset used(data.samples(), eta, 1, data.metadata());

  int code = kExitOk;
  std::vector<FockRun> runs;
  for (int d : dims) {
    runs.push_back(fit_fock(used, povm_config(d, a.phase_bins, a.quad_bins, true), FockConfig{}));
    if (!runs.back().report.converged) code = kExitNumerical;
  }
  std::ostringstream hs;
  hs << "dim,hs_distance\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    hs << dims[i] << ',' << num(hs_distance(runs[i].report.rho, runs.back().report.rho)) << '\n';
  }
  write_text(output_path(g, "hs_convergence.csv"), hs.str());

  const auto grid = square_grid(a.grid_extent, a.grid_points);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    write_text(output_path(g, "wigner_N" + std::to_string(dims[i]) + ".csv"),
               grid_csv(grid, wigner_from_rho(runs[i].report.rho, grid)));
  }

  EstimatorConfig ec;
  const EstimatorReport gauss = fit_gaussian(used, eta, a.bins, ec);
  if (!gauss.converged) code = kExitNumerical;
  std::vector<double> wg;
  wg.reserve(grid.size());
  const DisplacementVector zero = DisplacementVector::zero(1);
  for (const auto& p : grid) wg.push_back(wigner_gaussian(gauss.estimate, zero, Vector{{p[0], p[1]}}));
  write_text(output_path(g, "wigner_gaussian.csv"), grid_csv(grid, wg));

  NormalityConfig nc;
  nc.bin_size = a.bin_size;
  write_text(output_path(g, "normality_bins.csv"), normality_csv(normality_report(used, nc)));

  Json c;
  c["command"] = "make-figures";
  c["global"] = global_json(g);
  c["data"] = a.data;
  c["eta"] = eta;
  c["dims"] = dims;
  c["bins"] = a.bins;
  c["phase_bins"] = a.phase_bins;
  c["quadrature_bins"] = a.quad_bins;
  c["bin_size"] = a.bin_size;
  c["grid_extent"] = a.grid_extent;
  c["grid_points"] = a.grid_points;
  c["notes"] = notes;
  write_json(Json{{"config", c}}, output_path(g, "figures_config.json"));
  for (const auto& n : notes) err << "warning: " << n << '\n';
  out << "wrote figure inputs to " << g.out << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian-state homodyne tomography", "gausstomo"};
  app.require_subcommand(1);
  Global global;
  app.add_option("--seed", global.seed, "random seed");
  app.add_option("--out", global.out, "output directory");
  app.add_option("--eta", global.eta, "detector efficiency in (0, 1]");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "synthesize a homodyne dataset");
  s->add_option("--state", sim.state, "vacuum | mixture | file:<covariance.json>");
  s->add_option("--phases", sim.phases, "number of equally spaced phases");
  s->add_option("--per-bin", sim.per_bin, "samples per setting");
  s->add_option("--scan", sim.scan, "draw this many samples at uniformly random phases instead");
  s->add_flag("--two-mode", sim.two_mode, "two-mode vacuum with beam-splitter settings");
  s->add_option("--mean", sim.mean, "quadrature means")->delimiter(',');
  s->add_option("--mix-weight", sim.mix_weight, "mixture fixture: weight of the broad component");
  s->add_option("--mix-scale", sim.mix_scale, "mixture fixture: variance ratio of the broad component");
  s->add_option("--output", sim.output, "file name inside --out");

  FitGaussianArgs fg;
  auto* f = app.add_subcommand("fit-gaussian", "maximum-likelihood covariance estimate");
  f->add_option("data", fg.data, "dataset CSV")->required();
  f->add_option("--bins", fg.bins, "phase bins per setting group");
  f->add_option("--max-iter", fg.max_iterations);
  f->add_option("--tol", fg.tolerance, "residual tolerance");
  f->add_flag("--project", fg.project, "project an unphysical estimate onto the physical set");
  f->add_option("--moment", fg.moment, "centered | raw");
  f->add_option("--min-bin-count", fg.min_bin_count);
  f->add_option("--output", fg.output, "file name inside --out");

  FitFockArgs ff;
  auto* k = app.add_subcommand("fit-fock", "maximum-likelihood density matrix in a truncated Fock space");
  k->add_option("data", ff.data, "dataset CSV")->required();
  k->add_option("--dim", ff.dim, "Fock space dimension N");
  k->add_option("--phase-bins", ff.phase_bins);
  k->add_option("--quad-bins", ff.quad_bins);
  k->add_option("--max-iter", ff.max_iterations);
  k->add_option("--tol", ff.tolerance, "relative likelihood gain");
  k->add_flag("--no-efficiency", ff.no_efficiency, "ignore detector efficiency in the POVM");
  k->add_option("--grid-extent", ff.grid_extent);
  k->add_option("--grid-points", ff.grid_points);

  NormtestArgs nt;
  auto* n = app.add_subcommand("normtest", "Jarque-Bera and Shapiro-Wilk tests per phase bin");
  n->add_option("data", nt.data, "dataset CSV")->required();
  n->add_option("--bin-size", nt.bin_size);
  n->add_option("--reject-fraction", nt.reject_fraction);

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "compare Gaussian and Fock reconstructions");
  c->add_option("--gaussian", cmp.gaussian, "fit-gaussian report(s)");
  c->add_option("--fock", cmp.fock, "fit-fock density matrices");
  c->add_option("--fock-pair", cmp.fock_pair, "two fit-fock outputs from different datasets");
  c->add_option("--output", cmp.output, "file name inside --out");

  FiguresArgs fig;
  auto* m = app.add_subcommand("make-figures", "write CSV inputs for convergence and normality plots");
  m->add_option("data", fig.data, "dataset CSV")->required();
  m->add_option("--dims", fig.dims)->delimiter(',');
  m->add_option("--bins", fig.bins);
  m->add_option("--phase-bins", fig.phase_bins);
  m->add_option("--quad-bins", fig.quad_bins);
  m->add_option("--bin-size", fig.bin_size);
  m->add_option("--grid-extent", fig.grid_extent);
  m->add_option("--grid-points", fig.grid_points);

  for (auto* sub : {s, f, k, n, c, m}) sub->fallthrough();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (*s) return cmd_simulate(global, sim, out);
    if (*f) return cmd_fit_gaussian(global, fg, out, err);
    if (*k) return cmd_fit_fock(global, ff, out, err);
    if (*n) return cmd_normtest(global, nt, out, err);
    if (*c) return cmd_compare(global, cmp, out);
    if (*m) return cmd_make_figures(global, fig, out, err);
  } catch (const IllPosedError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace gausstomo::cli
