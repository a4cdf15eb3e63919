#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "angpool/combine.hpp"
#include "angpool/dataset.hpp"

namespace angpool {

// A combining method evaluated by the backtest. "direct" is a plain
// direction x (mean|weighted) combination; the other kinds are the named
// composites, each fitting its parameters on the in-sample window.
struct MethodSpec {
  enum class Kind { direct, switching, median, trimmed, beta_pool, recalibrated, secondary };

  std::string name;
  Kind kind = Kind::direct;
  Direction direction = Direction::horizontal;
  bool weighted = false;
  TrimKind trim_kind = TrimKind::exterior;

  // Parameter grids for the composites (defaults filled when empty).
  std::vector<double> trim_grid;
  std::vector<double> gamma_grid;
  std::vector<double> weight_grid;
  std::vector<double> beta_grid;
};

struct BacktestConfig {
  int initial_in_sample = 10;
  std::vector<MethodSpec> methods;  // empty -> default_methods()
  std::string benchmark = "horizontal_mean";
  std::vector<double> levels;  // empty -> the 23 Hub levels
  int grid_points = 1001;
  int min_weight_periods = 5;
  bool trace_fits = false;
  std::map<std::string, std::string> groups;  // series -> label; overrides the dataset

  // The three averaging directions, their weighted forms, and
  // horizontal/vertical switching in both flavors.
  static std::vector<MethodSpec> default_methods();

  void finalize();  // fills defaults, validates grids
};

BacktestConfig config_from_json(const std::string& text);
std::string config_to_json(const BacktestConfig& cfg);

// Parameters fitted for one (series, origin, method), kept for the run
// manifest and for look-ahead tests.
struct FitRecord {
  std::string series;
  std::string origin;
  std::string method;
  int theta = -1;
  double trim_fraction = -1.0;
  double gamma = -1.0;
  double secondary_weight = -1.0;
  double beta_a = -1.0;
  double beta_b = -1.0;
  int switched_to_vertical = -1;
  std::map<std::string, double> team_weights;
};

// Out-of-sample aggregates for one (method, series): scores averaged over
// horizons then origins, coverage pooled over scored cells.
struct SeriesScore {
  double mqs = 0.0;
  double interval95 = 0.0;
  double interval50 = 0.0;
  long cover95_hits = 0;
  long cover50_hits = 0;
  long cells = 0;
};

struct ScoreReport {
  std::vector<std::string> methods;  // config order
  std::vector<std::string> series;   // scored series, sorted
  std::string benchmark;
  std::map<std::string, std::string> groups;
  std::map<std::pair<std::string, std::string>, SeriesScore> per_series;
  long skipped_missing_truth = 0;
  long skipped_no_teams = 0;
  long skipped_unfittable = 0;
  long dropped_degenerate = 0;
  std::vector<FitRecord> fit_trace;
};

struct ReportRow {
  std::string method;
  std::string group;
  std::string metric;
  double value = 0.0;
};

// Expanding-window evaluation: parameters are refit at every origin on
// strictly prior data, combined forecasts are scored out of sample.
ScoreReport run_backtest(const ForecastDataset& dataset, BacktestConfig cfg);

// Per-group aggregation: scores averaged over the group's series, skill as
// the geometric mean of per-series ratios against the benchmark. The
// grouping must cover every scored series.
std::vector<ReportRow> group_summary(const ScoreReport& report,
                                     const std::map<std::string, std::string>& grouping);

std::string report_to_csv(const ScoreReport& report);
std::string manifest_to_json(const ScoreReport& report, const BacktestConfig& cfg);

}  // namespace angpool
