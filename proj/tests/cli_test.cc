#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "gausstomo/cli.h"
#include "gausstomo/json_io.h"

using namespace gausstomo;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "gausstomo");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::size_t data_rows(const std::string& csv) {
  std::size_t rows = 0;
  std::istringstream is(csv);
  for (std::string line; std::getline(is, line);) {
    if (!line.empty() && line[0] != '#' && line.rfind("phase", 0) != 0) ++rows;
  }
  return rows;
}

std::string samples_only(const std::string& csv) {
  std::string kept;
  std::istringstream is(csv);
  for (std::string line; std::getline(is, line);) {
    if (!line.empty() && line[0] != '#') kept += line + '\n';
  }
  return kept;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("gausstomo_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Writes `name` into the test directory through `simulate`.
  void simulate(const std::string& name, std::vector<std::string> extra, const std::string& seed = "1") {
    std::vector<std::string> args{"--seed", seed, "--out", dir_.string(), "simulate", "--output", name};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = run(args);
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateWritesAllSamples) {
  simulate("vac.csv", {"--eta", "1", "--state", "vacuum", "--phases", "31", "--per-bin", "10000"});
  const std::string csv = slurp(path("vac.csv"));
  EXPECT_EQ(data_rows(csv), 310000u);
  EXPECT_NE(csv.find("# eta=1"), std::string::npos);
  EXPECT_NE(csv.find("command=simulate"), std::string::npos);
}

TEST_F(CliTest, SimulateRequiresEta) {
  const auto r = run({"--out", dir_.string(), "simulate", "--state", "vacuum"});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("--eta"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("samples.csv")));
}

TEST_F(CliTest, SimulateRejectsUnphysicalState) {
  write_json(to_json(CovarianceMatrix(Matrix{{0.3, 0.0}, {0.0, 0.3}})), path("bad.json"));
  const auto r = run({"--eta", "1", "--out", dir_.string(), "simulate", "--state", "file:" + path("bad.json")});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_FALSE(fs::exists(path("samples.csv")));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({"fit-gaussian", "--bogus"}).code, cli::kExitValidation);
  EXPECT_EQ(run({"fit-gaussian", path("missing.csv")}).code, cli::kExitValidation);
  EXPECT_EQ(run({"--eta", "1.5", "--out", dir_.string(), "simulate"}).code, cli::kExitValidation);
  EXPECT_EQ(run({"--out", dir_.string(), "compare"}).code, cli::kExitValidation);
  EXPECT_EQ(run({}).code, cli::kExitValidation);
}

TEST_F(CliTest, MalformedCsvNamesLine) {
  std::ofstream(path("bad.csv")) << "# eta=1\n# modes=1\n0.1,0,1,0.3\n0.2,0,1,oops\n";
  const auto r = run({"--out", dir_.string(), "fit-gaussian", path("bad.csv")});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("line 4"), std::string::npos);
}

TEST_F(CliTest, SinglePhaseIsIllPosed) {
  std::ofstream os(path("one.csv"));
  os << "# eta=1\n# modes=1\n";
  for (int i = 0; i < 50; ++i) os << "0.1,0,1," << (i % 7 - 3) * 0.2 << '\n';
  os.close();
  const auto r = run({"--out", dir_.string(), "fit-gaussian", path("one.csv")});
  EXPECT_EQ(r.code, cli::kExitNumerical);
}

TEST_F(CliTest, FitGaussianDeterministicAndReadOnly) {
  simulate("vac.csv", {"--eta", "0.9", "--per-bin", "2000"});
  const std::string before = slurp(path("vac.csv"));
  const auto r1 = run({"--out", dir_.string(), "fit-gaussian", path("vac.csv"), "--output", "a.json"});
  const auto r2 = run({"--out", dir_.string(), "fit-gaussian", path("vac.csv"), "--output", "b.json"});
  ASSERT_EQ(r1.code, cli::kExitOk) << r1.err;
  ASSERT_EQ(r2.code, cli::kExitOk) << r2.err;
  EXPECT_EQ(slurp(path("vac.csv")), before);

  // The config records the output name, so compare the report sections.
  const Json a = read_json(path("a.json"));
  const Json b = read_json(path("b.json"));
  EXPECT_EQ(a.at("report").dump(), b.at("report").dump());
  EXPECT_TRUE(a.at("report").at("converged").get<bool>());
  EXPECT_EQ(a.at("config").at("eta").get<double>(), 0.9);
  const auto g = covariance_from_json(a.at("report").at("covariance"));
  EXPECT_LT((g.entries() - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 0.03);
}

TEST_F(CliTest, SimulateIsReproducible) {
  simulate("a.csv", {"--eta", "0.88", "--per-bin", "500"}, "7");
  simulate("b.csv", {"--eta", "0.88", "--per-bin", "500"}, "7");
  simulate("c.csv", {"--eta", "0.88", "--per-bin", "500"}, "8");
  const std::string a = slurp(path("a.csv"));
  const std::string b = slurp(path("b.csv"));
  EXPECT_EQ(data_rows(a), 31u * 500u);
  EXPECT_EQ(a, b);
  EXPECT_NE(samples_only(a), samples_only(slurp(path("c.csv"))));
}

TEST_F(CliTest, EtaOverrideIsReported) {
  simulate("vac.csv", {"--eta", "0.9", "--per-bin", "1000"});
  const auto r = run({"--eta", "0.8", "--out", dir_.string(), "fit-gaussian", path("vac.csv")});
  EXPECT_NE(r.err.find("overrides"), std::string::npos);
  EXPECT_EQ(read_json(path("gaussian_report.json")).at("config").at("eta").get<double>(), 0.8);
}

TEST_F(CliTest, TwoModeFit) {
  simulate("two.csv", {"--eta", "1", "--two-mode", "--per-bin", "3000"});
  const auto r = run({"--out", dir_.string(), "fit-gaussian", path("two.csv")});
  ASSERT_NE(r.code, cli::kExitValidation) << r.err;
  const Json j = read_json(path("gaussian_report.json"));
  EXPECT_EQ(j.at("report").at("covariance").at("modes").get<int>(), 2);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST_F(CliTest, NormtestVerdicts) {
  simulate("vac.csv", {"--eta", "1", "--per-bin", "5000", "--phases", "11"});
  simulate("mix.csv", {"--eta", "1", "--per-bin", "5000", "--phases", "11", "--state", "mixture"});
  ASSERT_EQ(run({"--out", path("v"), "normtest", path("vac.csv"), "--bin-size", "5000"}).code, cli::kExitOk);
  ASSERT_EQ(run({"--out", path("m"), "normtest", path("mix.csv"), "--bin-size", "5000"}).code, cli::kExitOk);
  // A single bin failing both tests already rejects, so only the rule is checked on vacuum.
  const Json v = read_json(path("v/normality.json")).at("summary");
  const bool gaussian = v.at("rejected_both").get<int>() == 0 && v.at("rejected_either").get<double>() / 11 <= 0.2;
  EXPECT_EQ(v.at("verdict").get<std::string>(), gaussian ? "gaussian" : "non-gaussian");
  EXPECT_LE(v.at("rejected_either").get<int>(), 3);
  EXPECT_EQ(read_json(path("m/normality.json")).at("summary").at("verdict").get<std::string>(), "non-gaussian");
  const std::string csv = slurp(path("m/normality.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 12);
}

TEST_F(CliTest, FockChainAndCompare) {
  simulate("vac.csv", {"--eta", "0.9", "--per-bin", "1000", "--phases", "15"});
  for (const char* dim : {"6", "10"}) {
    const auto r = run({"--out", dir_.string(), "fit-fock", path("vac.csv"), "--dim", dim, "--phase-bins", "15",
                        "--quad-bins", "21", "--grid-points", "11"});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  }
  ASSERT_TRUE(fs::exists(path("rho_N6.json")));
  ASSERT_TRUE(fs::exists(path("wigner_N10.csv")));
  const Json rho = read_json(path("rho_N10.json"));
  EXPECT_GT(rho.at("rho").at("re")[0][0].get<double>(), 0.95);

  ASSERT_EQ(run({"--out", dir_.string(), "fit-gaussian", path("vac.csv")}).code, cli::kExitOk);
  const auto r = run({"--out", dir_.string(), "compare", "--fock", path("rho_N6.json"), "--fock", path("rho_N10.json"),
                      "--fock", path("rho_N10.json"), "--gaussian", path("gaussian_report.json")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const Json c = read_json(path("compare.json"));
  const auto& rows = c.at("hs_distances").at("rows");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2].at("hs_distance").get<double>(), 0.0);
  EXPECT_GT(rows[0].at("hs_distance").get<double>(), 0.0);
  EXPECT_LT(c.at("covariance_deltas").at("rows")[1].at("max_abs_delta").get<double>(), 0.05);
}

TEST_F(CliTest, DegradationFactorFlagsMixture) {
  simulate("vac.csv", {"--eta", "1", "--per-bin", "2000"});
  simulate("mix.csv", {"--eta", "1", "--per-bin", "2000", "--state", "mixture"});
  ASSERT_EQ(run({"--out", dir_.string(), "fit-gaussian", path("vac.csv"), "--output", "a.json"}).code, cli::kExitOk);
  ASSERT_EQ(run({"--out", dir_.string(), "fit-gaussian", path("mix.csv"), "--output", "b.json"}).code, cli::kExitOk);
  const auto r = run({"--out", dir_.string(), "compare", "--gaussian", path("a.json"), "--gaussian", path("b.json")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const double f =
      read_json(path("compare.json")).at("likelihood").at("gaussian").at("degradation_factor").get<double>();
  EXPECT_GT(f, 1.0);
}

TEST_F(CliTest, MakeFigures) {
  simulate("vac.csv", {"--eta", "1", "--per-bin", "400", "--phases", "9"});
  const auto r = run({"--out", dir_.string(), "make-figures", path("vac.csv"), "--dims", "4,6", "--bins", "9",
                      "--phase-bins", "9", "--quad-bins", "11", "--bin-size", "400", "--grid-points", "5"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  for (const char* f : {"hs_convergence.csv", "wigner_N4.csv", "wigner_N6.csv", "wigner_gaussian.csv",
                        "normality_bins.csv", "figures_config.json"}) {
    EXPECT_TRUE(fs::exists(path(f))) << f;
  }
}
