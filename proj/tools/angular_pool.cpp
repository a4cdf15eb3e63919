#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "angpool/backtest.hpp"
#include "angpool/combine.hpp"
#include "angpool/error.hpp"
#include "angpool/estimation.hpp"
#include "angpool/ingest.hpp"
#include "angpool/json_io.hpp"
#include "angpool/scoring.hpp"
#include "angpool/util.hpp"
#include "angpool/verify.hpp"

namespace {

using namespace angpool;

Direction parse_direction(const std::string& text) {
  if (text == "vertical") return Direction::vertical;
  if (text == "horizontal") return Direction::horizontal;
  if (text == "angular") return Direction::angular;
  fail("invalid-input", "unknown direction: " + text);
}

struct CellSelector {
  std::vector<std::string> forecast_files;
  std::string series;
  std::string origin;
  int horizon = 1;
};

std::vector<PiecewiseLinearCdf> load_inputs(const std::vector<std::string>& cdf_files,
                                            const CellSelector& selector,
                                            const std::string& truth_file) {
  std::vector<PiecewiseLinearCdf> cdfs;
  for (const auto& path : cdf_files) cdfs.push_back(load_cdf_file(path));
  if (!selector.forecast_files.empty()) {
    if (selector.series.empty() || selector.origin.empty()) {
      fail("invalid-input", "--series and --origin are required with --forecasts");
    }
    std::string truth = truth_file;
    if (truth.empty()) {
      // Cell selection does not need observations; synthesize an empty file.
      const auto tmp = std::filesystem::temp_directory_path() / "angpool_empty_truth.csv";
      write_text_file(tmp.string(), "date,location,value\n");
      truth = tmp.string();
    }
    const ForecastDataset dataset = parse_hub_csv(selector.forecast_files, truth);
    for (const auto& warning : dataset.warnings) std::cerr << "warning: " << warning << "\n";
    const auto teams = dataset.teams_at(selector.series, selector.origin, selector.horizon);
    if (teams.empty()) {
      fail("invalid-input", "no forecasts for the selected cell");
    }
    for (const auto& team : teams) {
      const auto& qf = dataset.forecasts.at(
          {selector.series, selector.origin, selector.horizon, team});
      cdfs.push_back(cdf_from_quantiles(qf));
    }
  }
  if (cdfs.empty()) fail("invalid-input", "no input CDFs given");
  return cdfs;
}

int cmd_combine(const std::vector<std::string>& cdf_files, const CellSelector& selector,
                const std::string& truth_file, const std::string& direction_text,
                std::optional<double> theta, const std::string& agg_text,
                const std::string& weights_file, const std::string& trim_kind_text,
                double trim_fraction, int m, const std::string& out,
                bool check_exact) {
  const Direction direction = parse_direction(direction_text);
  if (direction == Direction::angular && !theta.has_value()) {
    fail("invalid-input", "--theta is required for angular combining");
  }
  if (direction != Direction::angular && theta.has_value()) {
    fail("invalid-input", "--theta only applies to angular combining");
  }
  const auto cdfs = load_inputs(cdf_files, selector, truth_file);

  CombinationSpec spec;
  spec.direction = direction;
  spec.theta_deg = theta.value_or(0.0);
  spec.grid_points = m;
  if (agg_text == "mean") {
    spec.aggregator = Aggregator::mean();
  } else if (agg_text == "weighted") {
    if (weights_file.empty()) {
      fail("invalid-input", "--weights-file is required for weighted combining");
    }
    spec.aggregator = Aggregator::weighted(load_weights_file(weights_file));
  } else if (agg_text == "median") {
    spec.aggregator = Aggregator::median();
  } else if (agg_text == "trimmed") {
    const TrimKind kind = trim_kind_text == "interior" ? TrimKind::interior
                                                       : TrimKind::exterior;
    spec.aggregator = Aggregator::trimmed(kind, trim_fraction);
  } else {
    fail("invalid-input", "unknown aggregator: " + agg_text);
  }

  const PiecewiseLinearCdf pooled = combine(cdfs, spec);
  if (check_exact && direction == Direction::angular && spec.theta_deg > 0.0 &&
      spec.aggregator.kind != AggregatorKind::median) {
    const auto grid = angular_combine_grid(
        cdfs, spec.theta_deg,
        spec.aggregator.kind == AggregatorKind::trimmed ? Aggregator::mean()
                                                        : spec.aggregator,
        m);
    std::cout << "exact-vs-grid sup-norm gap: "
              << fmt_double(sup_distance(pooled, grid)) << "\n";
  }
  if (out.empty()) {
    std::cout << cdf_to_json(pooled) << "\n";
  } else {
    save_cdf_file(pooled, out);
  }
  return 0;
}

int cmd_score(const std::string& cdf_file, double observation,
              const std::string& out) {
  const PiecewiseLinearCdf cdf = load_cdf_file(cdf_file);
  const auto& levels = hub_levels();
  std::ostringstream csv;
  csv << "metric,value\n";
  csv << "mqs," << fmt_double(mqs(cdf, observation, levels)) << "\n";
  csv << "crps," << fmt_double(crps(cdf, observation)) << "\n";
  csv << "interval_score_95,"
      << fmt_double(interval_score(0.05, cdf.inverse(0.025), cdf.inverse(0.975),
                                   observation))
      << "\n";
  csv << "interval_score_50,"
      << fmt_double(interval_score(0.50, cdf.inverse(0.25), cdf.inverse(0.75),
                                   observation))
      << "\n";
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    write_text_file(out, csv.str());
  }
  return 0;
}

int cmd_backtest(const std::vector<std::string>& forecast_files,
                 const std::string& truth_file, const std::string& config_file,
                 const std::string& out_dir) {
  BacktestConfig cfg;
  if (!config_file.empty()) cfg = config_from_json(read_text_file(config_file));
  ForecastDataset dataset = parse_hub_csv(forecast_files, truth_file);
  for (const auto& warning : dataset.warnings) std::cerr << "warning: " << warning << "\n";
  const ScoreReport report = run_backtest(dataset, cfg);
  cfg.finalize();
  std::filesystem::create_directories(out_dir);
  const auto report_path = std::filesystem::path(out_dir) / "report.csv";
  const auto manifest_path = std::filesystem::path(out_dir) / "manifest.json";
  write_text_file(report_path.string(), report_to_csv(report));
  write_text_file(manifest_path.string(), manifest_to_json(report, cfg));
  std::cout << "wrote " << report_path.string() << " and " << manifest_path.string()
            << " (" << report.series.size() << " series, " << report.methods.size()
            << " methods)\n";
  return 0;
}

int cmd_optimize(const std::vector<std::string>& forecast_files,
                 const std::string& truth_file, const std::string& series,
                 const std::string& what, bool weighted, const std::string& out) {
  const ForecastDataset dataset = parse_hub_csv(forecast_files, truth_file);
  for (const auto& warning : dataset.warnings) std::cerr << "warning: " << warning << "\n";
  if (series.empty()) fail("invalid-input", "--series is required");
  const auto& levels = hub_levels();

  // All cells with known truth become fitting history.
  std::vector<HistoryCell> cells;
  std::vector<InSampleRecord> records;
  std::vector<std::vector<std::string>> cell_teams;
  for (const auto& origin : dataset.origins) {
    for (int h = 1; h <= dataset.max_horizon; ++h) {
      const auto teams = dataset.teams_at(series, origin, h);
      if (teams.empty()) continue;
      const auto truth_it =
          dataset.truth.find({series, dataset.target_date(origin, h)});
      if (truth_it == dataset.truth.end()) continue;
      HistoryCell cell;
      cell.truth = truth_it->second;
      std::vector<std::string> kept;
      for (const auto& team : teams) {
        try {
          cell.cdfs.push_back(
              cdf_from_quantiles(dataset.forecasts.at({series, origin, h, team})));
          kept.push_back(team);
        } catch (const Error&) {
          std::cerr << "warning: degenerate forecast dropped: " << series << " "
                    << origin << " h" << h << " " << team << "\n";
        }
      }
      if (cell.cdfs.empty()) continue;
      for (std::size_t i = 0; i < kept.size(); ++i) {
        records.push_back({kept[i], origin, h, mqs(cell.cdfs[i], cell.truth, levels)});
      }
      cells.push_back(std::move(cell));
      cell_teams.push_back(std::move(kept));
    }
  }
  if (cells.empty()) fail("invalid-input", "no scoreable cells for " + series);
  if (weighted) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      cells[i].weights = estimate_weights(records, cell_teams[i]);
    }
  }

  std::ostringstream result;
  if (what == "theta") {
    const int theta = optimize_theta(cells, levels);
    result << "{\"theta\": " << theta << "}\n";
  } else if (what == "weights") {
    std::set<std::string> team_set;
    for (const auto& teams : cell_teams) team_set.insert(teams.begin(), teams.end());
    const std::vector<std::string> teams(team_set.begin(), team_set.end());
    const auto weights = estimate_weights(records, teams);
    result << "{";
    for (std::size_t i = 0; i < teams.size(); ++i) {
      result << (i == 0 ? "" : ", ") << "\"" << teams[i]
             << "\": " << fmt_double(weights[i]);
    }
    result << "}\n";
  } else {
    fail("invalid-input", "unknown optimization target: " + what);
  }
  if (out.empty()) {
    std::cout << result.str();
  } else {
    write_text_file(out, result.str());
  }
  return 0;
}

int cmd_verify(const std::string& suite, int trials, std::uint64_t seed, int k) {
  verify::Options options;
  options.trials = trials;
  options.seed = seed;
  options.median_k = k;
  const auto results = verify::run_suite(suite, options);
  bool all_passed = true;
  for (const auto& result : results) {
    std::cout << verify::format_result(result) << "\n";
    if (!result.passed && !result.skipped) all_passed = false;
  }
  return all_passed ? 0 : 1;
}

int cmd_export(const std::string& what, const std::vector<std::string>& cdf_files,
               const std::vector<std::string>& forecast_files,
               const std::string& truth_file, const std::string& series,
               const std::string& direction_text, std::optional<double> theta,
               int grid_n, const std::string& out) {
  std::ostringstream csv;
  if (what == "cdf") {
    if (cdf_files.size() != 1) fail("invalid-input", "cdf export takes one CDF file");
    const auto cdf = load_cdf_file(cdf_files.front());
    csv << "x,p\n";
    for (int i = 0; i < grid_n; ++i) {
      const double x = cdf.support_lo() +
                       (cdf.support_hi() - cdf.support_lo()) *
                           static_cast<double>(i) / static_cast<double>(grid_n - 1);
      csv << fmt_double(x) << ',' << fmt_double(cdf.eval(x)) << "\n";
    }
  } else if (what == "pdf") {
    if (cdf_files.size() != 1) fail("invalid-input", "pdf export takes one CDF file");
    const auto cdf = load_cdf_file(cdf_files.front());
    const double lo = cdf.support_lo();
    const double hi = cdf.support_hi();
    const double h = (hi - lo) / static_cast<double>(grid_n - 1);
    csv << "x,pdf,note\n";
    for (int i = 0; i < grid_n; ++i) {
      const double x = lo + h * static_cast<double>(i);
      bool jump_inside = false;
      const auto& knots = cdf.knots();
      for (std::size_t j = 1; j < knots.size(); ++j) {
        if (knots[j].x == knots[j - 1].x && knots[j].x > x - h && knots[j].x < x + h) {
          jump_inside = true;
          break;
        }
      }
      if (jump_inside) {
        csv << fmt_double(x) << ",,undefined-density\n";
      } else {
        const double density = (cdf.eval(x + h) - cdf.eval(x - h)) / (2.0 * h);
        csv << fmt_double(x) << ',' << fmt_double(density) << ",\n";
      }
    }
  } else if (what == "reliability") {
    if (forecast_files.empty() || truth_file.empty() || series.empty()) {
      fail("invalid-input", "reliability export needs --forecasts, --truth, --series");
    }
    const ForecastDataset dataset = parse_hub_csv(forecast_files, truth_file);
    const Direction direction =
        direction_text.empty() ? Direction::horizontal : parse_direction(direction_text);
    std::vector<PiecewiseLinearCdf> pools;
    std::vector<double> observations;
    for (const auto& origin : dataset.origins) {
      for (int h = 1; h <= dataset.max_horizon; ++h) {
        const auto teams = dataset.teams_at(series, origin, h);
        if (teams.empty()) continue;
        const auto truth_it =
            dataset.truth.find({series, dataset.target_date(origin, h)});
        if (truth_it == dataset.truth.end()) continue;
        std::vector<PiecewiseLinearCdf> members;
        for (const auto& team : teams) {
          try {
            members.push_back(
                cdf_from_quantiles(dataset.forecasts.at({series, origin, h, team})));
          } catch (const Error&) {
          }
        }
        if (members.empty()) continue;
        CombinationSpec spec;
        spec.direction = direction;
        spec.theta_deg = theta.value_or(45.0);
        pools.push_back(combine(members, spec));
        observations.push_back(truth_it->second);
      }
    }
    if (pools.empty()) fail("invalid-input", "no scoreable cells for " + series);
    csv << "level,empirical_fraction\n";
    for (const auto& [level, fraction] :
         reliability_data(pools, observations, hub_levels())) {
      csv << fmt_double(level) << ',' << fmt_double(fraction) << "\n";
    }
  } else if (what == "theta-sweep") {
    if (cdf_files.size() < 2) {
      fail("invalid-input", "theta-sweep needs at least two CDF files");
    }
    std::vector<PiecewiseLinearCdf> cdfs;
    for (const auto& path : cdf_files) cdfs.push_back(load_cdf_file(path));
    csv << "theta,mean,variance\n";
    for (int deg = 0; deg <= 90; ++deg) {
      const PiecewiseLinearCdf pooled =
          deg == 0 ? horizontal_combine(cdfs, Aggregator::mean())
                   : angular_combine_exact(cdfs, deg);
      const Moments moments = pooled.moments();
      csv << deg << ',' << fmt_double(moments.mean) << ','
          << fmt_double(moments.variance) << "\n";
    }
  } else {
    fail("invalid-input", "unknown export target: " + what);
  }
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    write_text_file(out, csv.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Combining forecasts of probability distributions by vertical, "
               "horizontal, or angular pooling"};
  app.require_subcommand(1);

  // combine
  auto* combine_cmd = app.add_subcommand("combine", "Combine CDFs and write the result");
  std::vector<std::string> combine_inputs;
  CellSelector selector;
  std::string combine_truth, combine_direction = "horizontal", combine_agg = "mean";
  std::string combine_weights_file, combine_trim_kind = "exterior", combine_out;
  std::optional<double> combine_theta;
  double combine_trim_fraction = 0.0;
  int combine_m = 1001;
  bool combine_check_exact = false;
  combine_cmd->add_option("inputs", combine_inputs, "CDF JSON files");
  combine_cmd->add_option("--forecasts", selector.forecast_files, "Hub forecast CSVs");
  combine_cmd->add_option("--truth", combine_truth, "Truth CSV (optional with --forecasts)");
  combine_cmd->add_option("--series", selector.series, "Series for the cell selector");
  combine_cmd->add_option("--origin", selector.origin, "Origin date for the cell selector");
  combine_cmd->add_option("--horizon", selector.horizon, "Horizon for the cell selector");
  combine_cmd->add_option("--direction", combine_direction,
                          "vertical | horizontal | angular");
  combine_cmd->add_option("--theta", combine_theta, "Angle in degrees (angular only)");
  combine_cmd->add_option("--agg", combine_agg, "mean | weighted | median | trimmed");
  combine_cmd->add_option("--weights-file", combine_weights_file, "JSON weight array");
  combine_cmd->add_option("--trim-kind", combine_trim_kind, "exterior | interior");
  combine_cmd->add_option("--trim-fraction", combine_trim_fraction, "Trim fraction");
  combine_cmd->add_option("--m", combine_m, "Grid points for the grid route");
  combine_cmd->add_option("--out", combine_out, "Output CDF JSON path");
  combine_cmd->add_flag("--check-exact", combine_check_exact,
                        "Also run the grid route and report the sup-norm gap");

  // score
  auto* score_cmd = app.add_subcommand("score", "Score a CDF against an observation");
  std::string score_cdf, score_out;
  double score_obs = 0.0;
  score_cmd->add_option("--cdf", score_cdf, "CDF JSON file")->required();
  score_cmd->add_option("--obs", score_obs, "Realized observation")->required();
  score_cmd->add_option("--out", score_out, "Output CSV path");

  // backtest
  auto* backtest_cmd = app.add_subcommand("backtest", "Expanding-window evaluation");
  std::vector<std::string> backtest_forecasts;
  std::string backtest_truth, backtest_config, backtest_out_dir = ".";
  backtest_cmd->add_option("--forecasts", backtest_forecasts, "Forecast CSVs")->required();
  backtest_cmd->add_option("--truth", backtest_truth, "Truth CSV")->required();
  backtest_cmd->add_option("--config", backtest_config, "Backtest config JSON");
  backtest_cmd->add_option("--out-dir", backtest_out_dir, "Output directory");

  // optimize
  auto* optimize_cmd = app.add_subcommand("optimize", "Fit combination parameters");
  std::vector<std::string> optimize_forecasts;
  std::string optimize_truth, optimize_series, optimize_what = "theta", optimize_out;
  bool optimize_weighted = false;
  optimize_cmd->add_option("--forecasts", optimize_forecasts, "Forecast CSVs")->required();
  optimize_cmd->add_option("--truth", optimize_truth, "Truth CSV")->required();
  optimize_cmd->add_option("--series", optimize_series, "Series to fit");
  optimize_cmd->add_option("--what", optimize_what, "theta | weights");
  optimize_cmd->add_flag("--weighted", optimize_weighted,
                         "Use inverse-MQS weights inside the theta objective");
  optimize_cmd->add_option("--out", optimize_out, "Output JSON path");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Run the randomized invariant suites");
  std::string verify_suite = "all";
  int verify_trials = 500;
  std::uint64_t verify_seed = 12345;
  int verify_k = 0;
  verify_cmd->add_option("--suite", verify_suite,
                         "mean | variance | crps | median | pdf | limits | all");
  verify_cmd->add_option("--trials", verify_trials, "Randomized trials per suite");
  verify_cmd->add_option("--seed", verify_seed, "Random seed");
  verify_cmd->add_option("--k", verify_k, "Median suite combination size (odd)");

  // export-plot-data
  auto* export_cmd = app.add_subcommand("export-plot-data", "Emit curve points as CSV");
  std::string export_what, export_truth, export_series, export_direction, export_out;
  std::vector<std::string> export_cdfs, export_forecasts;
  std::optional<double> export_theta;
  int export_grid_n = 201;
  export_cmd->add_option("--what", export_what, "cdf | pdf | reliability | theta-sweep")
      ->required();
  export_cmd->add_option("--cdf", export_cdfs, "CDF JSON files");
  export_cmd->add_option("--forecasts", export_forecasts, "Forecast CSVs");
  export_cmd->add_option("--truth", export_truth, "Truth CSV");
  export_cmd->add_option("--series", export_series, "Series id");
  export_cmd->add_option("--direction", export_direction, "Pooling direction");
  export_cmd->add_option("--theta", export_theta, "Angle for angular pooling");
  export_cmd->add_option("--grid-n", export_grid_n, "Points on the export grid");
  export_cmd->add_option("--out", export_out, "Output CSV path");

  try {
    app.parse(argc, argv);
    if (combine_cmd->parsed()) {
      return cmd_combine(combine_inputs, selector, combine_truth, combine_direction,
                         combine_theta, combine_agg, combine_weights_file,
                         combine_trim_kind, combine_trim_fraction, combine_m,
                         combine_out, combine_check_exact);
    }
    if (score_cmd->parsed()) return cmd_score(score_cdf, score_obs, score_out);
    if (backtest_cmd->parsed()) {
      return cmd_backtest(backtest_forecasts, backtest_truth, backtest_config,
                          backtest_out_dir);
    }
    if (optimize_cmd->parsed()) {
      return cmd_optimize(optimize_forecasts, optimize_truth, optimize_series,
                          optimize_what, optimize_weighted, optimize_out);
    }
    if (verify_cmd->parsed()) {
      return cmd_verify(verify_suite, verify_trials, verify_seed, verify_k);
    }
    if (export_cmd->parsed()) {
      return cmd_export(export_what, export_cdfs, export_forecasts, export_truth,
                        export_series, export_direction, export_theta, export_grid_n,
                        export_out);
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error[cli-usage]: " << e.what() << "\n";
    return 2;
  } catch (const angpool::Error& e) {
    std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
