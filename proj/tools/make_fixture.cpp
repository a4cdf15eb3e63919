// Writes the bundled 3-series synthetic fixture used by the README examples
// and the acceptance suite: data/fixture_forecasts.csv, data/fixture_truth.csv
// and data/fixture_config.json.

#include <filesystem>
#include <iostream>
#include <sstream>

#include "angpool/backtest.hpp"
#include "angpool/ingest.hpp"
#include "angpool/json_io.hpp"

using namespace angpool;

namespace {

ForecastDataset fixture_dataset() {
  SyntheticSpec s1;
  s1.k = 3;
  s1.means = {42.0, 50.0, 57.0};
  s1.sds = {16.0, 18.0, 17.0};
  s1.truth_mean = 50.0;
  s1.truth_sd = 10.0;
  s1.seed = 101;
  s1.series = "S1";
  s1.group = "wide";
  SyntheticSpec s2;
  s2.k = 3;
  s2.means = {38.0, 51.0, 62.0};
  s2.sds = {4.5, 5.0, 4.0};
  s2.truth_mean = 50.0;
  s2.truth_sd = 10.0;
  s2.seed = 202;
  s2.series = "S2";
  s2.group = "narrow";
  SyntheticSpec s3;
  s3.k = 4;
  s3.means = {42.0, 48.0, 52.0, 59.0};
  s3.sds = {7.0, 12.0, 9.0, 6.0};
  s3.truth_mean = 52.0;
  s3.truth_sd = 11.0;
  s3.seed = 303;
  s3.series = "S3";
  s3.group = "wide";

  const ForecastDataset parts[] = {
      generate_synthetic(s1, 16, 2),
      generate_synthetic(s2, 16, 2),
      generate_synthetic(s3, 16, 2),
  };
  return merge_datasets(parts);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string out_dir = argc > 1 ? argv[1] : "data";
  std::filesystem::create_directories(out_dir);
  const ForecastDataset dataset = fixture_dataset();

  std::ostringstream forecasts;
  write_forecast_csv(forecasts, dataset);
  write_text_file(out_dir + "/fixture_forecasts.csv", forecasts.str());

  std::ostringstream truth;
  write_truth_csv(truth, dataset);
  write_text_file(out_dir + "/fixture_truth.csv", truth.str());

  BacktestConfig cfg;
  cfg.initial_in_sample = 10;
  cfg.groups = {{"S1", "wide"}, {"S2", "narrow"}, {"S3", "wide"}};
  cfg.finalize();
  write_text_file(out_dir + "/fixture_config.json", config_to_json(cfg) + "\n");

  std::cout << "fixture written to " << out_dir << "\n";
  return 0;
}
