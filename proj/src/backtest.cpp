#include "angpool/backtest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <span>
#include <sstream>

#include <json.hpp>

#include "angpool/error.hpp"
#include "angpool/estimation.hpp"
#include "angpool/scoring.hpp"
#include "angpool/util.hpp"

namespace angpool {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string kind_to_string(MethodSpec::Kind kind) {
  switch (kind) {
    case MethodSpec::Kind::direct: return "direct";
    case MethodSpec::Kind::switching: return "switching";
    case MethodSpec::Kind::median: return "median";
    case MethodSpec::Kind::trimmed: return "trimmed";
    case MethodSpec::Kind::beta_pool: return "beta_pool";
    case MethodSpec::Kind::recalibrated: return "recalibrated";
    case MethodSpec::Kind::secondary: return "secondary";
  }
  fail("invalid-input", "unknown method kind");
}

MethodSpec::Kind kind_from_string(const std::string& s) {
  if (s == "direct") return MethodSpec::Kind::direct;
  if (s == "switching") return MethodSpec::Kind::switching;
  if (s == "median") return MethodSpec::Kind::median;
  if (s == "trimmed") return MethodSpec::Kind::trimmed;
  if (s == "beta_pool") return MethodSpec::Kind::beta_pool;
  if (s == "recalibrated") return MethodSpec::Kind::recalibrated;
  if (s == "secondary") return MethodSpec::Kind::secondary;
  fail("invalid-input", "unknown method kind: " + s);
}

std::string direction_to_string(Direction d) {
  switch (d) {
    case Direction::vertical: return "vertical";
    case Direction::horizontal: return "horizontal";
    case Direction::angular: return "angular";
  }
  fail("invalid-input", "unknown direction");
}

Direction direction_from_string(const std::string& s) {
  if (s == "vertical") return Direction::vertical;
  if (s == "horizontal") return Direction::horizontal;
  if (s == "angular") return Direction::angular;
  fail("invalid-input", "unknown direction: " + s);
}

}  // namespace

std::vector<MethodSpec> BacktestConfig::default_methods() {
  std::vector<MethodSpec> methods;
  const struct {
    const char* name;
    Direction direction;
    bool weighted;
  } direct[] = {
      {"horizontal_mean", Direction::horizontal, false},
      {"vertical_mean", Direction::vertical, false},
      {"angular_mean", Direction::angular, false},
      {"horizontal_weighted", Direction::horizontal, true},
      {"vertical_weighted", Direction::vertical, true},
      {"angular_weighted", Direction::angular, true},
  };
  for (const auto& d : direct) {
    MethodSpec m;
    m.name = d.name;
    m.kind = MethodSpec::Kind::direct;
    m.direction = d.direction;
    m.weighted = d.weighted;
    methods.push_back(std::move(m));
  }
  for (const bool weighted : {false, true}) {
    MethodSpec m;
    m.name = weighted ? "hv_switch_weighted" : "hv_switch_mean";
    m.kind = MethodSpec::Kind::switching;
    m.weighted = weighted;
    methods.push_back(std::move(m));
  }
  return methods;
}

void BacktestConfig::finalize() {
  if (methods.empty()) methods = default_methods();
  if (levels.empty()) levels = hub_levels();
  // Collect every validation failure before reporting.
  std::vector<std::string> problems;
  if (initial_in_sample < 1) problems.push_back("initial_in_sample must be at least 1");
  if (grid_points < 2) problems.push_back("grid_points must be at least 2");
  if (min_weight_periods < 1) {
    problems.push_back("min_weight_periods must be at least 1");
  }
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0) ||
        (i > 0 && levels[i] <= levels[i - 1])) {
      problems.push_back("levels must be strictly increasing within (0,1)");
      break;
    }
  }
  std::set<std::string> names;
  for (auto& m : methods) {
    if (m.name.empty()) problems.push_back("every method needs a name");
    if (!m.name.empty() && !names.insert(m.name).second) {
      problems.push_back("duplicate method name: " + m.name);
    }
    if (m.kind == MethodSpec::Kind::secondary &&
        m.direction == Direction::angular) {
      problems.push_back(m.name + ": secondary combination is vertical or horizontal");
    }
    if (m.trim_grid.empty()) m.trim_grid = {0.0, 0.2, 0.4, 0.6, 0.8};
    if (m.gamma_grid.empty()) m.gamma_grid = {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0};
    if (m.weight_grid.empty()) {
      for (int i = 0; i <= 20; ++i) m.weight_grid.push_back(i * 0.05);
    }
    if (m.beta_grid.empty()) m.beta_grid = {0.5, 0.75, 1.0, 1.5, 2.0, 3.0};
  }
  if (!names.count(benchmark)) {
    problems.push_back("benchmark method not in method list: " + benchmark);
  }
  if (!problems.empty()) {
    std::string joined = problems.front();
    for (std::size_t i = 1; i < problems.size(); ++i) joined += "; " + problems[i];
    fail("invalid-input", joined);
  }
}

BacktestConfig config_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail("invalid-input", std::string("bad config JSON: ") + e.what());
  }
  BacktestConfig cfg;
  if (doc.contains("initial_in_sample")) cfg.initial_in_sample = doc["initial_in_sample"];
  if (doc.contains("benchmark")) cfg.benchmark = doc["benchmark"];
  if (doc.contains("grid_points")) cfg.grid_points = doc["grid_points"];
  if (doc.contains("min_weight_periods")) cfg.min_weight_periods = doc["min_weight_periods"];
  if (doc.contains("trace_fits")) cfg.trace_fits = doc["trace_fits"];
  if (doc.contains("levels")) {
    for (const auto& v : doc["levels"]) cfg.levels.push_back(v.get<double>());
  }
  if (doc.contains("groups")) {
    for (const auto& [series, label] : doc["groups"].items()) {
      cfg.groups[series] = label.get<std::string>();
    }
  }
  if (doc.contains("methods")) {
    for (const auto& mj : doc["methods"]) {
      MethodSpec m;
      m.name = mj.at("name").get<std::string>();
      if (mj.contains("kind")) m.kind = kind_from_string(mj["kind"].get<std::string>());
      if (mj.contains("direction")) {
        m.direction = direction_from_string(mj["direction"].get<std::string>());
      }
      if (mj.contains("weighted")) m.weighted = mj["weighted"].get<bool>();
      if (mj.contains("trim_kind")) {
        const std::string tk = mj["trim_kind"].get<std::string>();
        if (tk == "exterior") m.trim_kind = TrimKind::exterior;
        else if (tk == "interior") m.trim_kind = TrimKind::interior;
        else fail("invalid-input", "unknown trim kind: " + tk);
      }
      for (const auto& [field, target] :
           std::initializer_list<std::pair<const char*, std::vector<double>*>>{
               {"trim_grid", &m.trim_grid},
               {"gamma_grid", &m.gamma_grid},
               {"weight_grid", &m.weight_grid},
               {"beta_grid", &m.beta_grid}}) {
        if (mj.contains(field)) {
          for (const auto& v : mj[field]) target->push_back(v.get<double>());
        }
      }
      cfg.methods.push_back(std::move(m));
    }
  }
  return cfg;
}

std::string config_to_json(const BacktestConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["initial_in_sample"] = cfg.initial_in_sample;
  doc["benchmark"] = cfg.benchmark;
  doc["grid_points"] = cfg.grid_points;
  doc["min_weight_periods"] = cfg.min_weight_periods;
  doc["levels"] = cfg.levels;
  if (!cfg.groups.empty()) {
    nlohmann::ordered_json groups;
    for (const auto& [series, label] : cfg.groups) groups[series] = label;
    doc["groups"] = std::move(groups);
  }
  nlohmann::ordered_json methods = nlohmann::ordered_json::array();
  for (const auto& m : cfg.methods) {
    nlohmann::ordered_json mj;
    mj["name"] = m.name;
    mj["kind"] = kind_to_string(m.kind);
    mj["direction"] = direction_to_string(m.direction);
    mj["weighted"] = m.weighted;
    if (m.kind == MethodSpec::Kind::trimmed) {
      mj["trim_kind"] = m.trim_kind == TrimKind::exterior ? "exterior" : "interior";
      mj["trim_grid"] = m.trim_grid;
    }
    if (m.kind == MethodSpec::Kind::recalibrated) mj["gamma_grid"] = m.gamma_grid;
    if (m.kind == MethodSpec::Kind::secondary) mj["weight_grid"] = m.weight_grid;
    if (m.kind == MethodSpec::Kind::beta_pool) mj["beta_grid"] = m.beta_grid;
    methods.push_back(std::move(mj));
  }
  doc["methods"] = std::move(methods);
  return doc.dump(2);
}

namespace {

struct CellMembers {
  std::vector<std::string> teams;
  std::vector<PiecewiseLinearCdf> cdfs;
};

struct SeriesData {
  // (origin, horizon) -> eligible members, after dropping degenerate CDFs.
  std::map<std::pair<std::string, int>, CellMembers> cells;
  std::map<std::pair<std::string, int>, double> cell_truth;
  std::vector<InSampleRecord> team_records;
  std::vector<std::string> record_targets;  // parallel to team_records
  // Per-cell MQS of the simple angular pool at every integer angle. The
  // pool of a historical cell does not depend on the fit origin, so this
  // table is filled once and reused by every refit of the series.
  std::map<std::pair<std::string, int>, std::array<double, 91>> angular_mean_mqs;
  long dropped_degenerate = 0;
};

struct MethodFit {
  int theta = -1;
  double trim_fraction = 0.0;
  double gamma = 1.0;
  double secondary_weight = 0.5;
  double beta_a = 1.0;
  double beta_b = 1.0;
  bool use_vertical = false;
  std::map<std::string, double> team_weights;  // weighted methods, traced
};

struct CellScores {
  double mqs = 0.0;
  double is95 = 0.0;
  double is50 = 0.0;
  bool cover95 = false;
  bool cover50 = false;
};

struct MethodOriginResult {
  bool fitted = false;
  MethodFit fit;
  std::vector<CellScores> cells;
  long skipped_unfittable = 0;
};

struct OriginResult {
  long skipped_missing_truth = 0;
  long skipped_no_teams = 0;
  std::vector<MethodOriginResult> methods;
};

SeriesData build_series_data(const ForecastDataset& dataset,
                             const std::string& series,
                             std::span<const double> levels) {
  SeriesData data;
  for (const std::string& origin : dataset.origins) {
    for (int h = 1; h <= dataset.max_horizon; ++h) {
      const std::vector<std::string> teams = dataset.teams_at(series, origin, h);
      if (teams.empty()) continue;
      CellMembers members;
      for (const std::string& team : teams) {
        const auto it = dataset.forecasts.find({series, origin, h, team});
        try {
          members.cdfs.push_back(cdf_from_quantiles(it->second));
          members.teams.push_back(team);
        } catch (const Error&) {
          ++data.dropped_degenerate;
        }
      }
      if (members.teams.empty()) continue;
      const auto key = std::make_pair(origin, h);
      const std::string target = dataset.target_date(origin, h);
      const auto truth_it = dataset.truth.find({series, target});
      if (truth_it != dataset.truth.end()) {
        data.cell_truth[key] = truth_it->second;
        for (std::size_t i = 0; i < members.teams.size(); ++i) {
          data.team_records.push_back(
              {members.teams[i], origin, h,
               mqs(members.cdfs[i], truth_it->second, levels)});
          data.record_targets.push_back(target);
        }
      }
      data.cells.emplace(key, std::move(members));
    }
  }
  std::vector<std::pair<std::string, int>> scored_keys;
  for (const auto& [key, truth] : data.cell_truth) {
    scored_keys.push_back(key);
    data.angular_mean_mqs[key] = {};
  }
  parallel_for(scored_keys.size(), [&](std::size_t i) {
    const auto& key = scored_keys[i];
    const CellMembers& members = data.cells.at(key);
    const double truth = data.cell_truth.at(key);
    auto& row = data.angular_mean_mqs.at(key);
    for (int theta = 0; theta <= 90; ++theta) {
      const PiecewiseLinearCdf pooled =
          theta == 0 ? horizontal_combine(members.cdfs, Aggregator::mean())
                     : angular_combine_exact(members.cdfs, theta);
      row[static_cast<std::size_t>(theta)] = mqs(pooled, truth, levels);
    }
  });
  return data;
}

// argmin over integer angles of the mean tabulated MQS; ties go to the
// smallest angle, matching optimize_theta.
int theta_from_table(const SeriesData& data,
                     std::span<const std::pair<std::string, int>> cell_keys) {
  int best = 0;
  double best_score = 0.0;
  bool first = true;
  for (int theta = 0; theta <= 90; ++theta) {
    double sum = 0.0;
    for (const auto& key : cell_keys) {
      sum += data.angular_mean_mqs.at(key)[static_cast<std::size_t>(theta)];
    }
    const double score = sum / static_cast<double>(cell_keys.size());
    if (first || score < best_score) {
      first = false;
      best = theta;
      best_score = score;
    }
  }
  return best;
}

PiecewiseLinearCdf direct_pool(Direction direction, int theta,
                               std::span<const PiecewiseLinearCdf> cdfs,
                               std::span<const double> weights) {
  const Aggregator agg = weights.empty()
                             ? Aggregator::mean()
                             : Aggregator::weighted({weights.begin(), weights.end()});
  switch (direction) {
    case Direction::vertical:
      return vertical_combine(cdfs, agg);
    case Direction::horizontal:
      return horizontal_combine(cdfs, agg);
    case Direction::angular:
      if (theta <= 0) return horizontal_combine(cdfs, agg);
      return angular_combine_exact(cdfs, theta, weights);
  }
  fail("invalid-input", "unknown direction");
}

PiecewiseLinearCdf apply_method(const MethodSpec& spec, const MethodFit& fit,
                                std::span<const PiecewiseLinearCdf> cdfs,
                                std::span<const double> weights) {
  switch (spec.kind) {
    case MethodSpec::Kind::direct:
      return direct_pool(spec.direction, fit.theta, cdfs, weights);
    case MethodSpec::Kind::switching:
      return direct_pool(fit.use_vertical ? Direction::vertical : Direction::horizontal,
                         -1, cdfs, weights);
    case MethodSpec::Kind::median:
      return median_combine(cdfs, Direction::vertical);
    case MethodSpec::Kind::trimmed: {
      const auto subset = trim_by_mean(cdfs, spec.trim_kind, fit.trim_fraction);
      return direct_pool(spec.direction, fit.theta, subset, {});
    }
    case MethodSpec::Kind::beta_pool:
      return beta_pool(cdfs, weights, {fit.beta_a, fit.beta_b});
    case MethodSpec::Kind::recalibrated: {
      const PiecewiseLinearCdf base =
          direct_pool(spec.direction, fit.theta, cdfs, weights);
      return recalibrate(base, RecalibrationParams::with_hub_bins(fit.gamma));
    }
    case MethodSpec::Kind::secondary: {
      const PiecewiseLinearCdf pool_h =
          direct_pool(Direction::horizontal, -1, cdfs, weights);
      const PiecewiseLinearCdf pool_v =
          direct_pool(Direction::vertical, -1, cdfs, weights);
      return secondary_combine(pool_h, pool_v, fit.secondary_weight, spec.direction);
    }
  }
  fail("invalid-input", "unknown method kind");
}

// Mean in-sample MQS of the method over the fitting cells; infinity when a
// cell cannot be pooled (infeasible trim candidates).
double fit_objective(const MethodSpec& spec, const MethodFit& fit,
                     std::span<const HistoryCell> cells,
                     std::span<const double> levels) {
  double sum = 0.0;
  for (const auto& cell : cells) {
    try {
      sum += mqs(apply_method(spec, fit, cell.cdfs, cell.weights), cell.truth, levels);
    } catch (const Error&) {
      return kInf;
    }
  }
  return sum / static_cast<double>(cells.size());
}

}  // namespace

ScoreReport run_backtest(const ForecastDataset& dataset, BacktestConfig cfg) {
  cfg.finalize();
  const auto n_origins = static_cast<int>(dataset.origins.size());
  if (cfg.initial_in_sample >= n_origins) {
    fail("invalid-input", "initial_in_sample must be smaller than the origin count");
  }

  ScoreReport report;
  report.benchmark = cfg.benchmark;
  for (const auto& m : cfg.methods) report.methods.push_back(m.name);

  std::map<std::string, SeriesData> series_data;
  for (const std::string& series : dataset.series) {
    series_data.emplace(series, build_series_data(dataset, series, cfg.levels));
    report.dropped_degenerate += series_data.at(series).dropped_degenerate;
  }

  struct Job {
    std::string series;
    int origin_index;
  };
  std::vector<Job> jobs;
  for (const std::string& series : dataset.series) {
    for (int t = cfg.initial_in_sample; t < n_origins; ++t) {
      jobs.push_back({series, t});
    }
  }
  std::vector<OriginResult> results(jobs.size());

  const auto run_job = [&](std::size_t job_index) {
    const Job& job = jobs[job_index];
    const SeriesData& data = series_data.at(job.series);
    const std::string& origin_t = dataset.origins[static_cast<std::size_t>(job.origin_index)];
    OriginResult& result = results[job_index];
    result.methods.resize(cfg.methods.size());

    // Fitting data: every cell whose target date is known by origin_t.
    std::vector<HistoryCell> cells;
    std::vector<std::vector<std::string>> cell_teams;
    std::vector<std::pair<std::string, int>> cell_keys;
    for (const auto& [key, members] : data.cells) {
      const auto truth_it = data.cell_truth.find(key);
      if (truth_it == data.cell_truth.end()) continue;
      if (dataset.target_date(key.first, key.second) > origin_t) continue;
      HistoryCell cell;
      cell.cdfs = members.cdfs;
      cell.truth = truth_it->second;
      cells.push_back(std::move(cell));
      cell_teams.push_back(members.teams);
      cell_keys.push_back(key);
    }
    std::vector<InSampleRecord> records;
    for (std::size_t i = 0; i < data.team_records.size(); ++i) {
      if (data.record_targets[i] <= origin_t) records.push_back(data.team_records[i]);
    }
    const auto weights_for = [&](const std::vector<std::string>& teams) {
      return estimate_weights(records, teams, cfg.min_weight_periods);
    };
    std::vector<HistoryCell> weighted_cells = cells;
    for (std::size_t i = 0; i < weighted_cells.size(); ++i) {
      weighted_cells[i].weights = weights_for(cell_teams[i]);
    }

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      const MethodSpec& spec = cfg.methods[mi];
      MethodOriginResult& mres = result.methods[mi];
      const std::vector<HistoryCell>& fit_cells = spec.weighted ? weighted_cells : cells;
      MethodFit fit;
      bool ok = true;
      const bool needs_history =
          spec.kind != MethodSpec::Kind::median &&
          !(spec.kind == MethodSpec::Kind::direct && spec.direction != Direction::angular);
      if (fit_cells.empty() && needs_history) {
        ok = false;
      } else {
        switch (spec.kind) {
          case MethodSpec::Kind::direct:
            if (spec.direction == Direction::angular) {
              fit.theta = spec.weighted ? optimize_theta(fit_cells, cfg.levels)
                                        : theta_from_table(data, cell_keys);
            }
            break;
          case MethodSpec::Kind::switching: {
            MethodFit probe;
            probe.use_vertical = false;
            const double mqs_h = fit_objective(spec, probe, fit_cells, cfg.levels);
            probe.use_vertical = true;
            const double mqs_v = fit_objective(spec, probe, fit_cells, cfg.levels);
            fit.use_vertical = mqs_v < mqs_h;  // tie keeps horizontal
            break;
          }
          case MethodSpec::Kind::median:
            break;
          case MethodSpec::Kind::trimmed: {
            double best = kInf;
            for (const double fraction : spec.trim_grid) {
              MethodFit probe;
              probe.trim_fraction = fraction;
              if (spec.direction == Direction::angular) {
                std::vector<HistoryCell> trimmed_cells;
                bool feasible = true;
                for (const auto& cell : fit_cells) {
                  try {
                    HistoryCell tc;
                    tc.cdfs = trim_by_mean(cell.cdfs, spec.trim_kind, fraction);
                    tc.truth = cell.truth;
                    trimmed_cells.push_back(std::move(tc));
                  } catch (const Error&) {
                    feasible = false;
                    break;
                  }
                }
                if (!feasible) continue;
                probe.theta = optimize_theta(trimmed_cells, cfg.levels);
              }
              const double score = fit_objective(spec, probe, fit_cells, cfg.levels);
              if (score < best) {
                best = score;
                fit = probe;
              }
            }
            ok = std::isfinite(best);
            break;
          }
          case MethodSpec::Kind::beta_pool: {
            const auto [a, b] = optimize_beta(
                [&](double a_try, double b_try) {
                  MethodFit probe;
                  probe.beta_a = a_try;
                  probe.beta_b = b_try;
                  return fit_objective(spec, probe, fit_cells, cfg.levels);
                },
                spec.beta_grid, spec.beta_grid);
            fit.beta_a = a;
            fit.beta_b = b;
            break;
          }
          case MethodSpec::Kind::recalibrated: {
            if (spec.direction == Direction::angular) {
              fit.theta = spec.weighted ? optimize_theta(fit_cells, cfg.levels)
                                        : theta_from_table(data, cell_keys);
            }
            fit.gamma = optimize_scalar(
                [&](double gamma_try) {
                  MethodFit probe = fit;
                  probe.gamma = gamma_try;
                  return fit_objective(spec, probe, fit_cells, cfg.levels);
                },
                spec.gamma_grid);
            break;
          }
          case MethodSpec::Kind::secondary: {
            fit.secondary_weight = optimize_scalar(
                [&](double w_try) {
                  MethodFit probe;
                  probe.secondary_weight = w_try;
                  return fit_objective(spec, probe, fit_cells, cfg.levels);
                },
                spec.weight_grid);
            break;
          }
        }
      }
      mres.fitted = ok;
      mres.fit = fit;
    }

    // Out-of-sample cells at this origin.
    for (int h = 1; h <= dataset.max_horizon; ++h) {
      const auto key = std::make_pair(origin_t, h);
      const auto cell_it = data.cells.find(key);
      if (cell_it == data.cells.end()) {
        ++result.skipped_no_teams;
        continue;
      }
      const auto truth_it = data.cell_truth.find(key);
      if (truth_it == data.cell_truth.end()) {
        ++result.skipped_missing_truth;
        continue;
      }
      const CellMembers& members = cell_it->second;
      const double truth = truth_it->second;
      std::vector<double> weights;
      for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        const MethodSpec& spec = cfg.methods[mi];
        MethodOriginResult& mres = result.methods[mi];
        if (!mres.fitted) {
          ++mres.skipped_unfittable;
          continue;
        }
        std::span<const double> cell_weights;
        if (spec.weighted) {
          weights = weights_for(members.teams);
          cell_weights = weights;
          if (cfg.trace_fits && mres.fit.team_weights.empty()) {
            for (std::size_t i = 0; i < members.teams.size(); ++i) {
              mres.fit.team_weights[members.teams[i]] = weights[i];
            }
          }
        }
        try {
          const PiecewiseLinearCdf pooled =
              apply_method(spec, mres.fit, members.cdfs, cell_weights);
          CellScores scores;
          scores.mqs = mqs(pooled, truth, cfg.levels);
          const double l95 = pooled.inverse(0.025);
          const double u95 = pooled.inverse(0.975);
          const double l50 = pooled.inverse(0.25);
          const double u50 = pooled.inverse(0.75);
          scores.is95 = interval_score(0.05, l95, u95, truth);
          scores.is50 = interval_score(0.50, l50, u50, truth);
          scores.cover95 = truth >= l95 && truth <= u95;
          scores.cover50 = truth >= l50 && truth <= u50;
          mres.cells.push_back(scores);
        } catch (const Error&) {
          ++mres.skipped_unfittable;
        }
      }
    }
  };
  parallel_for(jobs.size(), run_job);

  // Deterministic ordered reduction: horizon means per origin, then origin
  // means per series; coverage pooled over scored cells.
  struct Accumulator {
    double mqs_sum = 0.0, is95_sum = 0.0, is50_sum = 0.0;
    long origins = 0;
    long cover95 = 0, cover50 = 0, cells = 0;
  };
  std::map<std::pair<std::string, std::string>, Accumulator> acc;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const Job& job = jobs[j];
    OriginResult& result = results[j];
    report.skipped_missing_truth += result.skipped_missing_truth;
    report.skipped_no_teams += result.skipped_no_teams;
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      MethodOriginResult& mres = result.methods[mi];
      report.skipped_unfittable += mres.skipped_unfittable;
      if (cfg.trace_fits && mres.fitted) {
        FitRecord record;
        record.series = job.series;
        record.origin = dataset.origins[static_cast<std::size_t>(job.origin_index)];
        record.method = cfg.methods[mi].name;
        record.theta = mres.fit.theta;
        record.trim_fraction = mres.fit.trim_fraction;
        record.gamma = mres.fit.gamma;
        record.secondary_weight = mres.fit.secondary_weight;
        record.beta_a = mres.fit.beta_a;
        record.beta_b = mres.fit.beta_b;
        record.switched_to_vertical = mres.fit.use_vertical ? 1 : 0;
        record.team_weights = mres.fit.team_weights;
        report.fit_trace.push_back(std::move(record));
      }
      if (mres.cells.empty()) continue;
      auto& a = acc[{cfg.methods[mi].name, job.series}];
      double mqs_sum = 0.0, is95_sum = 0.0, is50_sum = 0.0;
      for (const auto& c : mres.cells) {
        mqs_sum += c.mqs;
        is95_sum += c.is95;
        is50_sum += c.is50;
        a.cover95 += c.cover95 ? 1 : 0;
        a.cover50 += c.cover50 ? 1 : 0;
        ++a.cells;
      }
      const auto n = static_cast<double>(mres.cells.size());
      a.mqs_sum += mqs_sum / n;
      a.is95_sum += is95_sum / n;
      a.is50_sum += is50_sum / n;
      ++a.origins;
    }
  }

  // A series enters the report only if every method scored it.
  std::set<std::string> scored;
  for (const std::string& series : dataset.series) {
    bool all = true;
    for (const auto& m : cfg.methods) {
      const auto it = acc.find({m.name, series});
      if (it == acc.end() || it->second.origins == 0) {
        all = false;
        break;
      }
    }
    if (all) scored.insert(series);
  }
  report.series.assign(scored.begin(), scored.end());
  const auto& label_map = cfg.groups.empty() ? dataset.groups : cfg.groups;
  for (const std::string& series : report.series) {
    const auto group_it = label_map.find(series);
    report.groups[series] = group_it == label_map.end() ? "all" : group_it->second;
    for (const auto& m : cfg.methods) {
      const Accumulator& a = acc.at({m.name, series});
      SeriesScore score;
      const auto n = static_cast<double>(a.origins);
      score.mqs = a.mqs_sum / n;
      score.interval95 = a.is95_sum / n;
      score.interval50 = a.is50_sum / n;
      score.cover95_hits = a.cover95;
      score.cover50_hits = a.cover50;
      score.cells = a.cells;
      report.per_series[{m.name, series}] = score;
    }
  }
  return report;
}

std::vector<ReportRow> group_summary(const ScoreReport& report,
                                     const std::map<std::string, std::string>& grouping) {
  std::map<std::string, std::vector<std::string>> members;
  for (const std::string& series : report.series) {
    const auto it = grouping.find(series);
    if (it == grouping.end()) {
      fail("invalid-input", "series missing from grouping: " + series);
    }
    members[it->second].push_back(series);
  }
  std::vector<std::string> group_names;
  group_names.push_back("all");
  for (const auto& [name, list] : members) {
    if (name != "all") group_names.push_back(name);
  }
  std::vector<ReportRow> rows;
  for (const std::string& method : report.methods) {
    for (const std::string& group : group_names) {
      const std::vector<std::string>& series =
          group == "all" ? report.series : members.at(group);
      if (series.empty()) continue;
      double mqs_sum = 0.0, is95_sum = 0.0, is50_sum = 0.0;
      long cover95 = 0, cover50 = 0, cells = 0;
      std::vector<double> method_mqs, benchmark_mqs;
      for (const std::string& s : series) {
        const SeriesScore& score = report.per_series.at({method, s});
        mqs_sum += score.mqs;
        is95_sum += score.interval95;
        is50_sum += score.interval50;
        cover95 += score.cover95_hits;
        cover50 += score.cover50_hits;
        cells += score.cells;
        method_mqs.push_back(score.mqs);
        benchmark_mqs.push_back(report.per_series.at({report.benchmark, s}).mqs);
      }
      const auto n = static_cast<double>(series.size());
      rows.push_back({method, group, "mqs", mqs_sum / n});
      rows.push_back({method, group, "interval_score_95", is95_sum / n});
      rows.push_back({method, group, "interval_score_50", is50_sum / n});
      rows.push_back({method, group, "coverage_95",
                      static_cast<double>(cover95) / static_cast<double>(cells)});
      rows.push_back({method, group, "coverage_50",
                      static_cast<double>(cover50) / static_cast<double>(cells)});
      rows.push_back({method, group, "skill_vs_benchmark",
                      skill_score(method_mqs, benchmark_mqs)});
    }
  }
  return rows;
}

std::string report_to_csv(const ScoreReport& report) {
  std::map<std::string, std::string> grouping;
  for (const std::string& series : report.series) {
    grouping[series] = report.groups.at(series);
  }
  const std::vector<ReportRow> rows = group_summary(report, grouping);
  std::ostringstream out;
  out << "method,group,metric,value\n";
  for (const auto& row : rows) {
    out << row.method << ',' << row.group << ',' << row.metric << ','
        << fmt_double(row.value) << '\n';
  }
  return out.str();
}

std::string manifest_to_json(const ScoreReport& report, const BacktestConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["config"] = nlohmann::ordered_json::parse(config_to_json(cfg));
  nlohmann::ordered_json skipped;
  skipped["missing_truth"] = report.skipped_missing_truth;
  skipped["no_teams"] = report.skipped_no_teams;
  skipped["unfittable"] = report.skipped_unfittable;
  skipped["degenerate_forecasts"] = report.dropped_degenerate;
  doc["skipped_cells"] = std::move(skipped);
  doc["scored_series"] = report.series;
  return doc.dump(2) + "\n";
}

}  // namespace angpool
