#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

#include <doctest.h>

#include "angpool/cdf.hpp"
#include "angpool/ingest.hpp"
#include "angpool/json_io.hpp"

using namespace angpool;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string command = std::string(ANGPOOL_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult result;
  char buffer[4096];
  while (std::fgets(buffer, sizeof(buffer), pipe) != nullptr) {
    result.output += buffer;
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string fixture_cdf(const std::string& name, double mean, double sd) {
  const auto path = std::filesystem::temp_directory_path() / name;
  save_cdf_file(cdf_from_quantiles(gaussian_quantile_forecast(mean, sd)),
                path.string());
  return path.string();
}

}  // namespace

TEST_CASE("invalid angles exit nonzero with a machine-greppable code") {
  const std::string a = fixture_cdf("cli_a.json", -0.15, 0.1);
  const std::string b = fixture_cdf("cli_b.json", 0.15, 0.1);
  const auto result =
      run_cli("combine " + a + " " + b + " --direction angular --theta 120");
  CHECK(result.exit_code != 0);
  CHECK(result.output.find("error[invalid-angle]") != std::string::npos);
}

TEST_CASE("horizontal combine of a single input reproduces its knots") {
  const std::string a = fixture_cdf("cli_single.json", 0.3, 0.2);
  const auto result = run_cli("combine " + a + " --direction horizontal");
  CHECK(result.exit_code == 0);
  const std::string expected = cdf_to_json(load_cdf_file(a)) + "\n";
  CHECK(result.output == expected);
}

TEST_CASE("angular combine of the two-Gaussian fixture centers at zero") {
  const std::string a = fixture_cdf("cli_ga.json", -0.15, 0.1);
  const std::string b = fixture_cdf("cli_gb.json", 0.15, 0.1);
  const auto out =
      (std::filesystem::temp_directory_path() / "cli_combined.json").string();
  const auto result = run_cli("combine " + a + " " + b +
                              " --direction angular --theta 45 --out " + out);
  CHECK(result.exit_code == 0);
  const auto pooled = load_cdf_file(out);
  CHECK(std::fabs(pooled.moments().mean) <= 1e-3);
}

TEST_CASE("theta given without angular direction is a flag conflict") {
  const std::string a = fixture_cdf("cli_conflict.json", 0.0, 1.0);
  const auto result = run_cli("combine " + a + " --direction vertical --theta 30");
  CHECK(result.exit_code != 0);
  CHECK(result.output.find("error[") != std::string::npos);
}

TEST_CASE("unreadable input files fail cleanly") {
  const auto result = run_cli("combine /nonexistent.json --direction vertical");
  CHECK(result.exit_code != 0);
  CHECK(result.output.find("error[io-error]") != std::string::npos);
}

TEST_CASE("backtest subcommand rejects an oversized in-sample window") {
  const auto tmp = std::filesystem::temp_directory_path();
  SyntheticSpec spec;
  spec.k = 2;
  spec.means = {45.0, 55.0};
  spec.sds = {9.0, 11.0};
  spec.truth_mean = 50.0;
  spec.truth_sd = 10.0;
  spec.seed = 3;
  spec.series = "S";
  const auto dataset = generate_synthetic(spec, 4, 1);
  std::ostringstream forecasts, truth;
  write_forecast_csv(forecasts, dataset);
  write_truth_csv(truth, dataset);
  const auto fpath = (tmp / "cli_bt_forecasts.csv").string();
  const auto tpath = (tmp / "cli_bt_truth.csv").string();
  const auto cpath = (tmp / "cli_bt_config.json").string();
  write_text_file(fpath, forecasts.str());
  write_text_file(tpath, truth.str());
  write_text_file(cpath, "{\"initial_in_sample\": 4}\n");
  const auto result = run_cli("backtest --forecasts " + fpath + " --truth " + tpath +
                              " --config " + cpath + " --out-dir " +
                              (tmp / "cli_bt_out").string());
  CHECK(result.exit_code != 0);
  CHECK(result.output.find("error[invalid-input]") != std::string::npos);
}

TEST_CASE("score subcommand emits the metric table") {
  const std::string a = fixture_cdf("cli_score.json", 0.0, 1.0);
  const auto result = run_cli("score --cdf " + a + " --obs 0.4");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("metric,value") != std::string::npos);
  CHECK(result.output.find("mqs,") != std::string::npos);
  CHECK(result.output.find("crps,") != std::string::npos);
}

TEST_CASE("verify subcommand: determinism and the even-k skip") {
  const auto once = run_cli("verify --suite mean --trials 3 --seed 7");
  const auto twice = run_cli("verify --suite mean --trials 3 --seed 7");
  CHECK(once.exit_code == 0);
  CHECK(once.output == twice.output);

  const auto skipped = run_cli("verify --suite median --trials 2 --k 4");
  CHECK(skipped.exit_code == 0);
  CHECK(skipped.output.find("skipped: k must be odd") != std::string::npos);
}

TEST_CASE("export-plot-data theta sweep has 91 nondecreasing-variance rows") {
  const std::string a = fixture_cdf("cli_sweep_a.json", -0.15, 0.1);
  const std::string b = fixture_cdf("cli_sweep_b.json", 0.15, 0.1);
  const auto result =
      run_cli("export-plot-data --what theta-sweep --cdf " + a + " --cdf " + b);
  CHECK(result.exit_code == 0);
  std::istringstream lines(result.output);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "theta,mean,variance");
  int rows = 0;
  double previous = -1.0;
  while (std::getline(lines, line)) {
    const auto last_comma = line.rfind(',');
    const double variance = std::stod(line.substr(last_comma + 1));
    CHECK(variance >= previous - 1e-9);
    previous = variance;
    ++rows;
  }
  CHECK(rows == 91);
}

TEST_CASE("export-plot-data cdf points lie on the knot interpolant") {
  const std::string a = fixture_cdf("cli_export.json", 0.5, 0.3);
  const auto result = run_cli("export-plot-data --what cdf --cdf " + a + " --grid-n 25");
  CHECK(result.exit_code == 0);
  const auto cdf = load_cdf_file(a);
  std::istringstream lines(result.output);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    const auto comma = line.find(',');
    const double x = std::stod(line.substr(0, comma));
    const double p = std::stod(line.substr(comma + 1));
    CHECK(p == doctest::Approx(cdf.eval(x)).epsilon(1e-9));
  }
}
