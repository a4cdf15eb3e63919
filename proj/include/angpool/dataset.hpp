#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "angpool/cdf.hpp"

namespace angpool {

struct ForecastKey {
  std::string series;
  std::string origin;
  int horizon = 0;
  std::string team;

  auto operator<=>(const ForecastKey&) const = default;
};

// Panel of quantile forecasts indexed by (series, origin, horizon, team)
// plus realized observations. Team sets may vary by cell.
struct ForecastDataset {
  std::vector<std::string> series;   // sorted unique
  std::vector<std::string> origins;  // ordered ISO dates
  int max_horizon = 0;
  std::map<ForecastKey, QuantileForecast> forecasts;
  std::map<std::pair<std::string, int>, std::string> target_dates;  // (origin, horizon)
  std::map<std::pair<std::string, std::string>, double> truth;      // (series, date)
  std::map<std::string, std::string> groups;                        // series -> label

  // Ingest bookkeeping.
  long dropped_missing_levels = 0;
  long dropped_crossing = 0;
  std::vector<std::string> warnings;

  // Target date for a cell; empty string when unknown.
  std::string target_date(const std::string& origin, int horizon) const;

  // Teams present at a cell, sorted.
  std::vector<std::string> teams_at(const std::string& series_id,
                                    const std::string& origin, int horizon) const;
};

// Days since 1970-01-01 for an ISO date, and back.
long days_from_iso_date(const std::string& iso);
std::string iso_date_from_days(long days);
std::string date_add_days(const std::string& iso, long days);

}  // namespace angpool
