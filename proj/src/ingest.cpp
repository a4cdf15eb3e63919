#include "angpool/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "angpool/error.hpp"
#include "angpool/json_io.hpp"
#include "angpool/math.hpp"
#include "angpool/util.hpp"

namespace angpool {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double parse_number(const std::string& text, const std::string& file, long line_no) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(value)) {
    fail("malformed-row",
         file + ":" + std::to_string(line_no) + ": bad number '" + text + "'");
  }
  return value;
}

int parse_horizon(const std::string& target, const std::string& file, long line_no) {
  const char* begin = target.c_str();
  char* end = nullptr;
  const long horizon = std::strtol(begin, &end, 10);
  const std::string rest = end;
  if (end == begin || horizon < 1 || rest.rfind(" wk ahead", 0) != 0) {
    fail("malformed-row", file + ":" + std::to_string(line_no) +
                              ": cannot parse horizon from target '" + target + "'");
  }
  return static_cast<int>(horizon);
}

std::string team_from_filename(const std::string& path) {
  std::string name = path;
  const auto slash = name.find_last_of("/\\");
  if (slash != std::string::npos) name = name.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  // Hub submission files are named <date>-<team>-<model>.csv.
  if (name.size() > 11 && name[4] == '-' && name[7] == '-' && name[10] == '-' &&
      std::isdigit(static_cast<unsigned char>(name[0]))) {
    name = name.substr(11);
  }
  return name;
}

struct RawQuantile {
  double level = 0.0;
  double value = 0.0;
};

}  // namespace

ForecastDataset parse_hub_csv(std::span<const std::string> forecast_files,
                              const std::string& truth_file) {
  if (forecast_files.empty()) {
    fail("invalid-input", "at least one forecast file is required");
  }
  ForecastDataset dataset;
  std::map<ForecastKey, std::vector<RawQuantile>> groups;
  std::set<std::string> series_seen;
  std::set<std::string> origins_seen;

  for (const std::string& path : forecast_files) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) {
      fail("malformed-row", path + ":1: empty forecast file");
    }
    const std::vector<std::string> header = split_csv_line(strip_cr(line));
    std::map<std::string, std::size_t> columns;
    for (std::size_t i = 0; i < header.size(); ++i) columns[header[i]] = i;
    for (const char* required : {"forecast_date", "target", "target_end_date",
                                 "location", "type", "quantile", "value"}) {
      if (!columns.count(required)) {
        fail("malformed-row",
             path + ":1: missing required column '" + std::string(required) + "'");
      }
    }
    const bool has_team_column = columns.count("team") > 0;
    const std::string file_team = team_from_filename(path);
    long line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      line = strip_cr(line);
      if (line.empty()) continue;
      const std::vector<std::string> fields = split_csv_line(line);
      if (fields.size() < header.size()) {
        fail("malformed-row",
             path + ":" + std::to_string(line_no) + ": expected " +
                 std::to_string(header.size()) + " fields, got " +
                 std::to_string(fields.size()));
      }
      HubRow row;
      row.forecast_date = fields[columns["forecast_date"]];
      row.target = fields[columns["target"]];
      row.target_end_date = fields[columns["target_end_date"]];
      row.location = fields[columns["location"]];
      row.type = fields[columns["type"]];
      days_from_iso_date(row.forecast_date);  // validates
      days_from_iso_date(row.target_end_date);
      if (row.type == "point") continue;
      if (row.type != "quantile") {
        fail("malformed-row", path + ":" + std::to_string(line_no) +
                                  ": unknown row type '" + row.type + "'");
      }
      const std::string& quantile_text = fields[columns["quantile"]];
      if (quantile_text.empty()) {
        fail("malformed-row",
             path + ":" + std::to_string(line_no) + ": quantile row without a level");
      }
      row.quantile = parse_number(quantile_text, path, line_no);
      if (!(row.quantile > 0.0 && row.quantile < 1.0)) {
        fail("malformed-row",
             path + ":" + std::to_string(line_no) + ": quantile level out of (0,1)");
      }
      row.value = parse_number(fields[columns["value"]], path, line_no);
      if (row.value < 0.0) {
        fail("malformed-row",
             path + ":" + std::to_string(line_no) + ": negative forecast value");
      }
      const int horizon = parse_horizon(row.target, path, line_no);
      const std::string team =
          has_team_column ? fields[columns["team"]] : file_team;
      const auto target_key = std::make_pair(row.forecast_date, horizon);
      const auto existing = dataset.target_dates.find(target_key);
      if (existing == dataset.target_dates.end()) {
        dataset.target_dates[target_key] = row.target_end_date;
      } else if (existing->second != row.target_end_date) {
        fail("malformed-row", path + ":" + std::to_string(line_no) +
                                  ": conflicting target_end_date for origin " +
                                  row.forecast_date);
      }
      series_seen.insert(row.location);
      origins_seen.insert(row.forecast_date);
      dataset.max_horizon = std::max(dataset.max_horizon, horizon);
      groups[{row.location, row.forecast_date, horizon, team}].push_back(
          {row.quantile, row.value});
    }
  }

  const auto& canonical = hub_levels();
  for (auto& [key, rows] : groups) {
    std::sort(rows.begin(), rows.end(),
              [](const RawQuantile& a, const RawQuantile& b) {
                return a.level < b.level;
              });
    bool matches = rows.size() == canonical.size();
    if (matches) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (std::fabs(rows[i].level - canonical[i]) > 1e-9) {
          matches = false;
          break;
        }
      }
    }
    const std::string cell = key.series + " " + key.origin + " h" +
                             std::to_string(key.horizon) + " " + key.team;
    if (!matches) {
      ++dataset.dropped_missing_levels;
      dataset.warnings.push_back("dropped forecast (levels do not match the 23 Hub levels): " + cell);
      continue;
    }
    QuantileForecast qf;
    qf.levels = canonical;
    qf.quantiles.reserve(rows.size());
    bool crossing = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && rows[i].value < rows[i - 1].value) crossing = true;
      qf.quantiles.push_back(rows[i].value);
    }
    if (crossing) {
      ++dataset.dropped_crossing;
      dataset.warnings.push_back("dropped forecast (crossing quantiles): " + cell);
      continue;
    }
    dataset.forecasts.emplace(key, std::move(qf));
  }

  {
    std::istringstream in(read_text_file(truth_file));
    std::string line;
    if (!std::getline(in, line)) {
      fail("malformed-row", truth_file + ":1: empty truth file");
    }
    const std::vector<std::string> header = split_csv_line(strip_cr(line));
    std::map<std::string, std::size_t> columns;
    for (std::size_t i = 0; i < header.size(); ++i) columns[header[i]] = i;
    for (const char* required : {"date", "location", "value"}) {
      if (!columns.count(required)) {
        fail("malformed-row", truth_file + ":1: missing required column '" +
                                  std::string(required) + "'");
      }
    }
    long line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      line = strip_cr(line);
      if (line.empty()) continue;
      const std::vector<std::string> fields = split_csv_line(line);
      if (fields.size() < header.size()) {
        fail("malformed-row", truth_file + ":" + std::to_string(line_no) +
                                  ": truncated truth row");
      }
      const std::string date = fields[columns["date"]];
      days_from_iso_date(date);
      const std::string location = fields[columns["location"]];
      const double value = parse_number(fields[columns["value"]], truth_file, line_no);
      const auto key = std::make_pair(location, date);
      if (dataset.truth.count(key)) {
        fail("malformed-row", truth_file + ":" + std::to_string(line_no) +
                                  ": duplicate truth for " + location + " " + date);
      }
      dataset.truth[key] = value;
    }
  }

  dataset.series.assign(series_seen.begin(), series_seen.end());
  dataset.origins.assign(origins_seen.begin(), origins_seen.end());
  for (const std::string& s : dataset.series) dataset.groups.emplace(s, "all");
  return dataset;
}

void write_forecast_csv(std::ostream& out, const ForecastDataset& dataset) {
  out << "forecast_date,target,target_end_date,location,type,quantile,value,team\n";
  for (const auto& [key, qf] : dataset.forecasts) {
    const std::string target =
        std::to_string(key.horizon) + " wk ahead inc death";
    const std::string target_end = dataset.target_date(key.origin, key.horizon);
    for (std::size_t i = 0; i < qf.levels.size(); ++i) {
      out << key.origin << ',' << target << ',' << target_end << ',' << key.series
          << ",quantile," << fmt_double(qf.levels[i]) << ','
          << fmt_double(qf.quantiles[i]) << ',' << key.team << '\n';
    }
  }
}

void write_truth_csv(std::ostream& out, const ForecastDataset& dataset) {
  out << "date,location,value\n";
  for (const auto& [key, value] : dataset.truth) {
    out << key.second << ',' << key.first << ',' << fmt_double(value) << '\n';
  }
}

QuantileForecast gaussian_quantile_forecast(double mean, double sd,
                                            std::span<const double> levels) {
  if (!(sd > 0.0)) fail("invalid-input", "gaussian forecast needs sd > 0");
  QuantileForecast qf;
  qf.levels = levels.empty() ? hub_levels()
                             : std::vector<double>(levels.begin(), levels.end());
  qf.quantiles.reserve(qf.levels.size());
  for (const double alpha : qf.levels) {
    qf.quantiles.push_back(mean + sd * normal_quantile(alpha));
  }
  return qf;
}

ForecastDataset generate_synthetic(const SyntheticSpec& spec, int n_origins,
                                   int n_horizons) {
  if (spec.k < 1 || spec.means.size() != static_cast<std::size_t>(spec.k) ||
      spec.sds.size() != static_cast<std::size_t>(spec.k)) {
    fail("invalid-input", "synthetic spec needs k means and k sds");
  }
  for (const double sd : spec.sds) {
    if (!(sd > 0.0)) fail("invalid-input", "synthetic sds must be positive");
  }
  if (!(spec.truth_sd > 0.0)) fail("invalid-input", "synthetic truth sd must be positive");
  if (n_origins < 1 || n_horizons < 1) {
    fail("invalid-input", "synthetic panel needs at least one origin and horizon");
  }
  ForecastDataset dataset;
  dataset.series = {spec.series};
  dataset.groups[spec.series] = spec.group;
  dataset.max_horizon = n_horizons;
  std::vector<QuantileForecast> team_forecasts;
  std::vector<std::string> team_names;
  team_forecasts.reserve(static_cast<std::size_t>(spec.k));
  for (int i = 0; i < spec.k; ++i) {
    team_forecasts.push_back(gaussian_quantile_forecast(
        spec.means[static_cast<std::size_t>(i)], spec.sds[static_cast<std::size_t>(i)]));
    char name[16];
    std::snprintf(name, sizeof(name), "team%02d", i + 1);
    team_names.emplace_back(name);
  }
  const long origin_day = days_from_iso_date(spec.first_origin);
  for (int o = 0; o < n_origins; ++o) {
    const std::string origin = iso_date_from_days(origin_day + 7L * o);
    dataset.origins.push_back(origin);
    for (int h = 1; h <= n_horizons; ++h) {
      dataset.target_dates[{origin, h}] = iso_date_from_days(origin_day + 7L * (o + h));
      for (int i = 0; i < spec.k; ++i) {
        dataset.forecasts.emplace(
            ForecastKey{spec.series, origin, h, team_names[static_cast<std::size_t>(i)]},
            team_forecasts[static_cast<std::size_t>(i)]);
      }
    }
  }
  Rng rng(spec.seed);
  for (int j = 1; j <= n_origins - 1 + n_horizons; ++j) {
    const std::string date = iso_date_from_days(origin_day + 7L * j);
    dataset.truth[{spec.series, date}] = rng.normal(spec.truth_mean, spec.truth_sd);
  }
  return dataset;
}

ForecastDataset merge_datasets(std::span<const ForecastDataset> parts) {
  if (parts.empty()) fail("invalid-input", "nothing to merge");
  ForecastDataset merged;
  std::set<std::string> series;
  std::set<std::string> origins;
  for (const auto& part : parts) {
    for (const auto& s : part.series) {
      if (!series.insert(s).second) {
        fail("invalid-input", "merged datasets must cover disjoint series");
      }
    }
    origins.insert(part.origins.begin(), part.origins.end());
    merged.max_horizon = std::max(merged.max_horizon, part.max_horizon);
    merged.forecasts.insert(part.forecasts.begin(), part.forecasts.end());
    merged.truth.insert(part.truth.begin(), part.truth.end());
    merged.groups.insert(part.groups.begin(), part.groups.end());
    for (const auto& [key, date] : part.target_dates) {
      const auto existing = merged.target_dates.find(key);
      if (existing != merged.target_dates.end() && existing->second != date) {
        fail("invalid-input", "merged datasets disagree on target dates");
      }
      merged.target_dates[key] = date;
    }
    merged.dropped_missing_levels += part.dropped_missing_levels;
    merged.dropped_crossing += part.dropped_crossing;
    merged.warnings.insert(merged.warnings.end(), part.warnings.begin(),
                           part.warnings.end());
  }
  merged.series.assign(series.begin(), series.end());
  merged.origins.assign(origins.begin(), origins.end());
  return merged;
}

}  // namespace angpool
