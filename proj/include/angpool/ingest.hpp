#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "angpool/dataset.hpp"

namespace angpool {

// One row of a Hub-style forecast CSV.
struct HubRow {
  std::string forecast_date;
  std::string target;
  std::string target_end_date;
  std::string location;
  std::string type;
  bool has_quantile = false;
  double quantile = 0.0;
  double value = 0.0;
};

// Parses Hub-style forecast CSVs plus a truth CSV into a dataset. Forecast
// columns: forecast_date,target,target_end_date,location,type,quantile,value
// with an optional trailing "team" column; without it the team id is the
// file name (a leading YYYY-MM-DD- prefix and the extension are stripped).
// Truth columns: date,location,value. Point rows are ignored; quantile
// groups missing any of the 23 Hub levels, and groups with crossing
// quantiles, are dropped and counted.
ForecastDataset parse_hub_csv(std::span<const std::string> forecast_files,
                              const std::string& truth_file);

// Serializers for the same schemas (forecast CSV carries the team column).
void write_forecast_csv(std::ostream& out, const ForecastDataset& dataset);
void write_truth_csv(std::ostream& out, const ForecastDataset& dataset);

// Gaussian discretized at the given levels, via the Hub bound rule.
QuantileForecast gaussian_quantile_forecast(double mean, double sd,
                                            std::span<const double> levels = {});

struct SyntheticSpec {
  int k = 2;
  std::vector<double> means;
  std::vector<double> sds;
  double truth_mean = 0.0;
  double truth_sd = 1.0;
  std::uint64_t seed = 1;
  std::string series = "synthetic";
  std::string first_origin = "2020-06-06";
  std::string group = "all";
};

// Every team submits its own Gaussian, discretized at the 23 levels, for
// every cell; truths are sampled from the truth distribution. Deterministic
// given the seed.
ForecastDataset generate_synthetic(const SyntheticSpec& spec, int n_origins,
                                   int n_horizons);

// Union of datasets over disjoint series.
ForecastDataset merge_datasets(std::span<const ForecastDataset> parts);

}  // namespace angpool
