#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gausstomo/errors.h"
#include "gausstomo/fock_mle.h"
#include "gausstomo/gaussian_core.h"
#include "gausstomo/gaussian_mle.h"
#include "gausstomo/gaussianity.h"
#include "gausstomo/homodyne_data.h"

namespace py = pybind11;
using namespace gausstomo;

namespace {

std::vector<SettingRequest> settings_from(const std::vector<std::tuple<double, double, int, std::size_t>>& rows) {
  std::vector<SettingRequest> out;
  for (const auto& [phase, bs, mode, count] : rows) {
    if (mode != 1 && mode != 2) throw DomainError("mode must be 1 or 2");
    out.push_back({{phase, bs, static_cast<ModeSelector>(mode)}, count});
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaussian-state homodyne tomography";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<IllPosedError>(m, "IllPosedError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());

  py::enum_<ModeSelector>(m, "ModeSelector")
      .value("FIRST", ModeSelector::kFirst)
      .value("SECOND", ModeSelector::kSecond);

  py::class_<CovarianceMatrix>(m, "CovarianceMatrix")
      .def(py::init<const Matrix&>())
      .def_static("vacuum", &CovarianceMatrix::vacuum, py::arg("mode_count") = 1)
      .def_property_readonly("mode_count", &CovarianceMatrix::mode_count)
      .def_property_readonly("entries", &CovarianceMatrix::entries)
      .def("__repr__", [](const CovarianceMatrix& g) {
        return "CovarianceMatrix(modes=" + std::to_string(g.mode_count()) + ")";
      });

  py::class_<DisplacementVector>(m, "DisplacementVector")
      .def(py::init<const Vector&>())
      .def_static("zero", &DisplacementVector::zero, py::arg("mode_count") = 1)
      .def_property_readonly("entries", &DisplacementVector::entries);

  py::class_<PhysicalityReport>(m, "PhysicalityReport")
      .def_readonly("min_symplectic_eigenvalue", &PhysicalityReport::min_symplectic_eigenvalue)
      .def_readonly("min_uncertainty_eigenvalue", &PhysicalityReport::min_uncertainty_eigenvalue)
      .def_readonly("physical", &PhysicalityReport::physical);

  m.def("check_physical", py::overload_cast<const Matrix&, double>(&check_physical), py::arg("g"),
        py::arg("tol") = kPhysicalityTolerance);
  m.def("symplectic_eigenvalues", &symplectic_eigenvalues);
  m.def("symplectic_form", &symplectic_form);
  m.def("bs_symplectic", &bs_symplectic);
  m.def("projection_vector", [](double phase, double bs_angle, int mode, int mode_count) {
    return ProjectionVector::for_setting({phase, bs_angle, static_cast<ModeSelector>(mode)}, mode_count).entries();
  }, py::arg("phase"), py::arg("bs_angle") = 0.0, py::arg("mode") = 1, py::arg("mode_count") = 1);
  m.def("wigner_gaussian", &wigner_gaussian);

  py::class_<HomodyneDataset>(m, "HomodyneDataset")
      .def_property_readonly("efficiency", &HomodyneDataset::efficiency)
      .def_property_readonly("mode_count", &HomodyneDataset::mode_count)
      .def_property_readonly("metadata", &HomodyneDataset::metadata)
      .def("__len__", &HomodyneDataset::size)
      .def("phases", [](const HomodyneDataset& d) {
        std::vector<double> v;
        for (const auto& s : d.samples()) v.push_back(s.phase);
        return v;
      })
      .def("values", [](const HomodyneDataset& d) {
        std::vector<double> v;
        for (const auto& s : d.samples()) v.push_back(s.value);
        return v;
      })
      .def("to_csv", &format_csv);

  m.def("efficiency_noise_variance", &efficiency_noise_variance);
  m.def("uniform_settings", [](int phases, std::size_t count) {
    std::vector<std::tuple<double, double, int, std::size_t>> out;
    for (const auto& r : uniform_phase_settings(phases, count)) out.emplace_back(r.setting.phase, 0.0, 1, r.count);
    return out;
  });
  m.def("two_mode_settings", [](int phases, std::size_t count) {
    std::vector<std::tuple<double, double, int, std::size_t>> out;
    for (const auto& r : two_mode_settings(phases, count)) {
      out.emplace_back(r.setting.phase, r.setting.bs_angle, static_cast<int>(r.setting.mode), r.count);
    }
    return out;
  });
  m.def("synthesize",
        [](const CovarianceMatrix& g, double eta, const std::vector<std::tuple<double, double, int, std::size_t>>& s,
           std::uint64_t seed) {
          return synthesize(g, DisplacementVector::zero(g.mode_count()), eta, settings_from(s), seed);
        },
        py::arg("g"), py::arg("eta"), py::arg("settings"), py::arg("seed"));
  m.def("synthesize_mixture",
        [](const CovarianceMatrix& g, double eta, const std::vector<std::tuple<double, double, int, std::size_t>>& s,
           double weight, double scale, std::uint64_t seed) {
          return synthesize_mixture(g, eta, settings_from(s), weight, scale, seed);
        });
  m.def("parse_csv", &parse_csv);
  m.def("load_csv", &load_csv);

  py::class_<BinnedStats>(m, "BinnedStats")
      .def_readonly("mode_count", &BinnedStats::mode_count)
      .def_readonly("warnings", &BinnedStats::warnings)
      .def("__len__", [](const BinnedStats& s) { return s.bins.size(); })
      .def("counts", [](const BinnedStats& s) {
        std::vector<std::size_t> v;
        for (const auto& b : s.bins) v.push_back(b.count);
        return v;
      })
      .def("phases", [](const BinnedStats& s) {
        std::vector<double> v;
        for (const auto& b : s.bins) v.push_back(b.setting.phase);
        return v;
      })
      .def("centered_sum_sq", [](const BinnedStats& s) {
        std::vector<double> v;
        for (const auto& b : s.bins) v.push_back(b.centered_sum_sq);
        return v;
      });
  m.def("bin_by_phase", &bin_by_phase, py::arg("dataset"), py::arg("n_bins") = 31);

  py::enum_<SecondMoment>(m, "SecondMoment")
      .value("CENTERED", SecondMoment::kCentered)
      .value("RAW", SecondMoment::kRaw);

  py::class_<EstimatorConfig>(m, "EstimatorConfig")
      .def(py::init<>())
      .def_readwrite("max_iterations", &EstimatorConfig::max_iterations)
      .def_readwrite("residual_tolerance", &EstimatorConfig::residual_tolerance)
      .def_readwrite("likelihood_tolerance", &EstimatorConfig::likelihood_tolerance)
      .def_readwrite("damping", &EstimatorConfig::damping)
      .def_readwrite("project_unphysical", &EstimatorConfig::project_unphysical)
      .def_readwrite("moment", &EstimatorConfig::moment)
      .def_readwrite("min_bin_count", &EstimatorConfig::min_bin_count);

  py::class_<EstimatorReport>(m, "EstimatorReport")
      .def_property_readonly("estimate", [](const EstimatorReport& r) { return r.estimate.entries(); })
      .def_property_readonly("displacement", [](const EstimatorReport& r) { return r.displacement.entries(); })
      .def_readonly("iterations", &EstimatorReport::iterations)
      .def_readonly("converged", &EstimatorReport::converged)
      .def_readonly("log_likelihood_trace", &EstimatorReport::log_likelihood_trace)
      .def_readonly("final_residual", &EstimatorReport::final_residual)
      .def_readonly("physicality", &EstimatorReport::physicality)
      .def_readonly("warnings", &EstimatorReport::warnings)
      .def_readonly("sample_count", &EstimatorReport::sample_count)
      .def_readonly("mean_log_density", &EstimatorReport::mean_log_density);

  m.def("estimate", &estimate, py::arg("stats"), py::arg("eta"), py::arg("config") = EstimatorConfig{});
  m.def("estimate_two_mode", &estimate_two_mode, py::arg("stats"), py::arg("eta"),
        py::arg("config") = EstimatorConfig{});
  m.def("log_likelihood", &log_likelihood, py::arg("g"), py::arg("stats"), py::arg("eta"),
        py::arg("moment") = SecondMoment::kCentered);
  m.def("log_likelihood_gradient", &log_likelihood_gradient, py::arg("g"), py::arg("stats"), py::arg("eta"),
        py::arg("moment") = SecondMoment::kCentered);
  m.def("extremal_residual", &extremal_residual, py::arg("g"), py::arg("stats"), py::arg("eta"),
        py::arg("moment") = SecondMoment::kCentered);
  m.def("iterate_once", &iterate_once, py::arg("g"), py::arg("stats"), py::arg("eta"),
        py::arg("moment") = SecondMoment::kCentered);
  m.def("oracle_lsq_fit", &oracle_lsq_fit, py::arg("stats"), py::arg("eta"),
        py::arg("moment") = SecondMoment::kCentered);

  m.def("hermite_wavefunction", &hermite_wavefunction);

  py::class_<DensityMatrix>(m, "DensityMatrix")
      .def(py::init<const ComplexMatrix&>())
      .def_static("fock", &DensityMatrix::fock)
      .def_static("thermal", &DensityMatrix::thermal)
      .def_property_readonly("dim", &DensityMatrix::dim)
      .def_property_readonly("entries", &DensityMatrix::entries);

  py::class_<PovmConfig>(m, "PovmConfig")
      .def(py::init<>())
      .def_readwrite("phase_bins", &PovmConfig::phase_bins)
      .def_readwrite("quadrature_bins", &PovmConfig::quadrature_bins)
      .def_readwrite("dim", &PovmConfig::dim)
      .def_readwrite("include_efficiency", &PovmConfig::include_efficiency);

  py::class_<FockConfig>(m, "FockConfig")
      .def(py::init<>())
      .def_readwrite("max_iterations", &FockConfig::max_iterations)
      .def_readwrite("tolerance", &FockConfig::tolerance);

  py::class_<FockReport>(m, "FockReport")
      .def_readonly("rho", &FockReport::rho)
      .def_readonly("iterations", &FockReport::iterations)
      .def_readonly("converged", &FockReport::converged)
      .def_readonly("log_likelihood_trace", &FockReport::log_likelihood_trace)
      .def_readonly("warnings", &FockReport::warnings);

  m.def("povm_element", [](double phase, double lower, double upper, double eta, int dim) {
    return povm_element(phase, {lower, upper}, eta, dim);
  });
  m.def("fock_reconstruct",
        [](const HomodyneDataset& data, const PovmConfig& pc, const FockConfig& fc) {
          return ml_reconstruct(build_povm(data, pc), fc);
        },
        py::arg("dataset"), py::arg("povm") = PovmConfig{}, py::arg("config") = FockConfig{});
  m.def("covariance_from_rho", [](const DensityMatrix& rho) {
    const FockMoments mo = covariance_from_rho(rho);
    return py::make_tuple(mo.covariance.entries(), mo.mean.entries());
  });
  m.def("wigner_from_rho", [](const DensityMatrix& rho, const std::vector<std::array<double, 2>>& grid) {
    return wigner_from_rho(rho, grid);
  });
  m.def("hs_distance", &hs_distance);

  py::class_<TestResult>(m, "TestResult")
      .def_readonly("statistic", &TestResult::statistic)
      .def_readonly("p_value", &TestResult::p_value);
  m.def("jarque_bera", [](const std::vector<double>& x) { return jarque_bera(x); });
  m.def("shapiro_wilk", [](const std::vector<double>& x) { return shapiro_wilk_split(x); });
  m.def("skewness", [](const std::vector<double>& x) { return skewness(x); });
  m.def("kurtosis_excess", [](const std::vector<double>& x) { return kurtosis_excess(x); });

  py::class_<NormalityReport>(m, "NormalityReport")
      .def_readonly("rejected_jb", &NormalityReport::rejected_jb)
      .def_readonly("rejected_sw", &NormalityReport::rejected_sw)
      .def_readonly("rejected_either", &NormalityReport::rejected_either)
      .def_readonly("rejected_both", &NormalityReport::rejected_both)
      .def_readonly("gaussian", &NormalityReport::gaussian)
      .def_readonly("warnings", &NormalityReport::warnings)
      .def_property_readonly("bin_count", [](const NormalityReport& r) { return r.bins.size(); });
  m.def("normality_report", [](const HomodyneDataset& d, std::size_t bin_size, double reject_fraction) {
    NormalityConfig c;
    c.bin_size = bin_size;
    c.reject_fraction = reject_fraction;
    return normality_report(d, c);
  }, py::arg("dataset"), py::arg("bin_size") = 10000, py::arg("reject_fraction") = 0.2);
}
