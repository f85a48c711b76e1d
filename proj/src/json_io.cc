#include "gausstomo/json_io.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "gausstomo/errors.h"

namespace gausstomo {
namespace {

Json matrix_rows(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix rows_matrix(const Json& rows, std::size_t n, const char* what) {
  if (!rows.is_array() || rows.size() != n) {
    throw ParseError(std::string(what) + " must be an array of " + std::to_string(n) + " rows");
  }
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!rows[i].is_array() || rows[i].size() != n) {
      throw ParseError(std::string(what) + " row " + std::to_string(i) + " has the wrong length");
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!rows[i][j].is_number()) throw ParseError(std::string(what) + " entries must be numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    }
  }
  return m;
}

std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

Json to_json(const CovarianceMatrix& g) {
  return Json{{"modes", g.mode_count()}, {"entries", matrix_rows(g.entries())}};
}

Json to_json(const DisplacementVector& mean) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < mean.entries().size(); ++i) out.push_back(mean.entries()(i));
  return out;
}

Json to_json(const PhysicalityReport& report) {
  return Json{{"min_symplectic_eigenvalue", report.min_symplectic_eigenvalue},
              {"min_uncertainty_eigenvalue", report.min_uncertainty_eigenvalue},
              {"physical", report.physical}};
}

Json to_json(const DensityMatrix& rho) {
  return Json{{"dim", rho.dim()},
              {"re", matrix_rows(rho.entries().real())},
              {"im", matrix_rows(rho.entries().imag())}};
}

Json to_json(const EstimatorReport& report) {
  Json j;
  j["covariance"] = to_json(report.estimate);
  j["displacement"] = to_json(report.displacement);
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["final_residual"] = report.final_residual;
  j["physicality"] = to_json(report.physicality);
  j["sample_count"] = report.sample_count;
  j["mean_log_density"] = report.mean_log_density;
  j["log_likelihood_trace"] = report.log_likelihood_trace;
  j["warnings"] = report.warnings;
  return j;
}

Json to_json(const NormalityReport& report) {
  Json j;
  j["bins"] = report.bins.size();
  j["rejected_jb"] = report.rejected_jb;
  j["rejected_sw"] = report.rejected_sw;
  j["rejected_either"] = report.rejected_either;
  j["rejected_both"] = report.rejected_both;
  j["verdict"] = report.gaussian ? "gaussian" : "non-gaussian";
  Json rows = Json::array();
  for (const auto& b : report.bins) {
    rows.push_back(Json{{"phase", b.phase_center},
                        {"n", b.count},
                        {"variance", b.variance},
                        {"skewness", b.skewness},
                        {"kurtosis_excess", b.kurtosis_excess},
                        {"w_jb", b.jb.statistic},
                        {"p_jb", b.jb.p_value},
                        {"w_sw", b.sw.statistic},
                        {"p_sw", b.sw.p_value},
                        {"reject_jb", b.reject_jb},
                        {"reject_sw", b.reject_sw}});
  }
  j["per_bin"] = std::move(rows);
  j["warnings"] = report.warnings;
  return j;
}

CovarianceMatrix covariance_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("modes") || !j.contains("entries")) {
    throw ParseError("covariance JSON needs 'modes' and 'entries'");
  }
  const int modes = j.at("modes").get<int>();
  if (modes != 1 && modes != 2) throw ParseError("'modes' must be 1 or 2");
  return CovarianceMatrix(rows_matrix(j.at("entries"), static_cast<std::size_t>(2 * modes), "entries"));
}

DisplacementVector displacement_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("displacement must be a flat array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return DisplacementVector(v);
}

DensityMatrix density_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("re") || !j.contains("im")) {
    throw ParseError("density matrix JSON needs 'dim', 're' and 'im'");
  }
  const auto n = j.at("dim").get<std::size_t>();
  const Matrix re = rows_matrix(j.at("re"), n, "re");
  const Matrix im = rows_matrix(j.at("im"), n, "im");
  ComplexMatrix m(re.rows(), re.cols());
  m.real() = re;
  m.imag() = im;
  return DensityMatrix(m);
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open " + path.string());
  try {
    return Json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

CovarianceMatrix load_covariance(const std::filesystem::path& path) {
  const Json j = read_json(path);
  try {
    return covariance_from_json(j.contains("covariance") ? j.at("covariance") : j);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string normality_csv(const NormalityReport& report) {
  std::ostringstream os;
  os << "phase,variance,w_jb,p_jb,w_sw,p_sw\n";
  for (const auto& b : report.bins) {
    os << num(b.phase_center) << ',' << num(b.variance) << ',' << num(b.jb.statistic) << ',' << num(b.jb.p_value)
       << ',' << num(b.sw.statistic) << ',' << num(b.sw.p_value) << '\n';
  }
  return os.str();
}

}  // namespace gausstomo
