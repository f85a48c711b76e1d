#pragma once

// JSON encodings of the structured results.
//
//   covariance:  {"modes": M, "entries": [[...], ...]}   (row-major 2M x 2M)
//   displacement: [x1, y1, ...]
//   density matrix: {"dim": N, "re": [[...]], "im": [[...]]}

#include <filesystem>
#include <string>

#include <json.hpp>

#include "gausstomo/fock_mle.h"
#include "gausstomo/gaussian_core.h"
#include "gausstomo/gaussian_mle.h"
#include "gausstomo/gaussianity.h"

namespace gausstomo {

using Json = nlohmann::ordered_json;

Json to_json(const CovarianceMatrix& g);
Json to_json(const DisplacementVector& mean);
Json to_json(const PhysicalityReport& report);
Json to_json(const DensityMatrix& rho);
Json to_json(const EstimatorReport& report);
Json to_json(const NormalityReport& report);

CovarianceMatrix covariance_from_json(const Json& j);
DisplacementVector displacement_from_json(const Json& j);
DensityMatrix density_from_json(const Json& j);

// Reads a covariance matrix either bare or wrapped as {"covariance": {...}}.
CovarianceMatrix load_covariance(const std::filesystem::path& path);

Json read_json(const std::filesystem::path& path);
void write_json(const Json& j, const std::filesystem::path& path);

// One row per bin: phase,variance,w_jb,p_jb,w_sw,p_sw.
std::string normality_csv(const NormalityReport& report);

}  // namespace gausstomo
