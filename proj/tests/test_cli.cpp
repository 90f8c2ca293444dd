#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "biwhiten/cli.hpp"
#include "biwhiten/io.hpp"
#include "biwhiten/simgen.hpp"

using namespace biwhiten;

namespace {

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"biwhiten"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

struct TempPath {
  std::string path;
  explicit TempPath(const std::string& name)
      : path((std::filesystem::temp_directory_path() / name).string()) {}
  ~TempPath() {
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("model and grid flag parsing") {
  CHECK(std::get<QvfParams>(parse_model("poisson")).b == 1.0);
  CHECK(std::get<QvfParams>(parse_model("binomial:5")).c == doctest::Approx(-0.2));
  CHECK(std::get<QvfParams>(parse_model("negbinomial:3")).c == doctest::Approx(1.0 / 3.0));
  CHECK(std::get<QvfParams>(parse_model("genpoisson:0.1")).b == doctest::Approx(1.0 / 0.81));
  const auto qvf = std::get<QvfParams>(parse_model("qvf:0.5,2,0.25"));
  CHECK(qvf.a == 0.5);
  CHECK(qvf.b == 2.0);
  CHECK(qvf.c == 0.25);
  const auto ab = std::get<AlphaBeta>(parse_model("alphabeta:1.5,0.25"));
  CHECK(ab.alpha == 1.5);
  CHECK(ab.beta == 0.25);
  CHECK_THROWS_AS(parse_model("weibull"), DomainError);
  CHECK_THROWS_AS(parse_model("qvf:1,2"), DomainError);

  const auto grid = parse_beta_grid("0:0.25:1");
  REQUIRE(grid.size() == 5);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1.0);
  CHECK_THROWS_AS(parse_beta_grid("0:0:1"), DomainError);
  CHECK_THROWS_AS(parse_beta_grid("1:0.1"), DomainError);

  CHECK(parse_factor_dist("lognormal:2").kind == FactorDist::Kind::log_normal);
  CHECK(parse_factor_dist("uniform:1,2").p2 == 2.0);
  CHECK_THROWS_AS(parse_factor_dist("cauchy:1"), DomainError);
}

TEST_CASE("simulate then rank recovers the planted rank") {
  TempPath mtx("bw_cli_y.mtx");
  TempPath report("bw_cli_rank.json");
  CHECK(run_cli({"simulate", "-m", "300", "-n", "1000", "-r", "10", "--mean", "1",
                 "--seed", "6", "-o", mtx.path}) == 0);
  CHECK(std::filesystem::exists(mtx.path));
  const OrderedJson sidecar = read_report(mtx.path + ".json");
  CHECK(sidecar["seed"] == 6);
  CHECK(sidecar["family"] == "poisson");

  CHECK(run_cli({"rank", "--model", "poisson", "--input", mtx.path, "--tol", "1e-12",
                 "-o", report.path}) == 0);
  const OrderedJson j = read_report(report.path);
  CHECK(j["analysis"]["rank"] == 10);
  CHECK(j["schema_version"] == kReportSchemaVersion);
  CHECK(j["model"]["type"] == "qvf");
}

TEST_CASE("fit on a pure-noise simulation stays close to the MP law") {
  TempPath mtx("bw_cli_noise.mtx");
  TempPath report("bw_cli_fit.json");
  CHECK(run_cli({"simulate", "-m", "250", "-n", "500", "--signal", "fullrank", "--raw-scale",
                 "--seed", "2", "-o", mtx.path}) == 0);
  CHECK(run_cli({"fit", "--alpha", "1", "--beta", "0", "--input", mtx.path, "-o",
                 report.path}) == 0);
  const OrderedJson j = read_report(report.path);
  CHECK(j["model"]["type"] == "alphabeta");
  CHECK(j["ks_distance"].get<double>() < 0.05);
  CHECK(j["ks_pvalue"].get<double>() >= 0.0);
}

TEST_CASE("diagnose flags the identity matrix and exits nonzero") {
  TempPath mtx("bw_cli_eye.mtx");
  TempPath report("bw_cli_diag.json");
  {
    DenseMatrix eye = DenseMatrix::Identity(6, 6);
    write_matrix_market(eye, mtx.path);
  }
  CHECK(run_cli({"diagnose", "--input", mtx.path, "-o", report.path}) == 1);
  const OrderedJson j = read_report(report.path);
  CHECK(j["scalable"] == false);
  CHECK(!j["diagnosis"]["row_violations"].empty());

  TempPath ones("bw_cli_ones.mtx");
  TempPath report2("bw_cli_diag2.json");
  write_matrix_market(DenseMatrix::Ones(4, 5), ones.path);
  CHECK(run_cli({"diagnose", "--input", ones.path, "-o", report2.path}) == 0);
  CHECK(read_report(report2.path)["scalable"] == true);
}

TEST_CASE("scale emits gauge-normalized factors and the scaled matrix") {
  TempPath mtx("bw_cli_scale_in.mtx");
  TempPath report("bw_cli_scale.json");
  TempPath scaled("bw_cli_scaled.csv");
  CHECK(run_cli({"simulate", "-m", "40", "-n", "90", "-r", "3", "--mean", "6", "--seed", "4",
                 "-o", mtx.path}) == 0);
  CHECK(run_cli({"scale", "--input", mtx.path, "-o", report.path, "--scaled-output",
                 scaled.path, "--scaled-format", "csv"}) == 0);
  const OrderedJson j = read_report(report.path);
  const auto x = j["factors"]["x"].get<std::vector<double>>();
  const auto y = j["factors"]["y"].get<std::vector<double>>();
  double sx = 0.0, sy = 0.0;
  for (double v : x) sx += v;
  for (double v : y) sy += v;
  CHECK(sx / static_cast<double>(x.size()) ==
        doctest::Approx(sy / static_cast<double>(y.size())).epsilon(1e-10));

  const DenseMatrix S = read_matrix({scaled.path, MatrixSource::Format::dense_csv, false, false});
  CHECK(S.rows() == static_cast<Index>(x.size()));
  CHECK(S.cols() == static_cast<Index>(y.size()));
}

TEST_CASE("adapt reports selection and seeded validation deterministically") {
  TempPath mtx("bw_cli_adapt_in.mtx");
  TempPath r1("bw_cli_adapt1.json");
  TempPath r2("bw_cli_adapt2.json");
  CHECK(run_cli({"simulate", "-m", "80", "-n", "240", "--signal", "fullrank", "--raw-scale",
                 "--seed", "3", "-o", mtx.path}) == 0);
  const std::vector<std::string> args{"adapt",        "--input", mtx.path, "--beta-grid",
                                      "0:0.5:1",      "--trials", "2",      "--seed",
                                      "11",           "-o"};
  auto run = [&](const std::string& out) {
    auto a = args;
    a.push_back(out);
    return run_cli(a);
  };
  CHECK(run(r1.path) == 0);
  CHECK(run(r2.path) == 0);
  CHECK(slurp(r1.path) == slurp(r2.path));  // byte-identical

  const OrderedJson j = read_report(r1.path);
  CHECK(j["selection"]["beta_grid"].size() == 3);
  CHECK(j["selection"]["selected"].contains("alpha"));
  CHECK(j["validation"]["trials"] == 2);
}

TEST_CASE("usage and domain error exit codes") {
  CHECK(run_cli({"rank", "--input", "x.mtx", "--definitely-not-a-flag"}) == 2);
  CHECK(run_cli({"frobnicate"}) == 2);
  CHECK(run_cli({"rank", "--input", "/nonexistent/path.mtx"}) == 1);
  TempPath mtx("bw_cli_badmodel.mtx");
  write_matrix_market(DenseMatrix::Ones(3, 3), mtx.path);
  CHECK(run_cli({"rank", "--input", mtx.path, "--model", "weibull"}) == 1);
}
