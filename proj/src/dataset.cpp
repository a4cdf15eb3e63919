#include "angpool/dataset.hpp"

#include <algorithm>
#include <cstdio>

#include "angpool/error.hpp"

namespace angpool {

std::string ForecastDataset::target_date(const std::string& origin,
                                         int horizon) const {
  const auto it = target_dates.find({origin, horizon});
  if (it != target_dates.end()) return it->second;
  return date_add_days(origin, 7L * horizon);
}

std::vector<std::string> ForecastDataset::teams_at(const std::string& series_id,
                                                   const std::string& origin,
                                                   int horizon) const {
  std::vector<std::string> teams;
  ForecastKey lo{series_id, origin, horizon, ""};
  for (auto it = forecasts.lower_bound(lo); it != forecasts.end(); ++it) {
    const ForecastKey& key = it->first;
    if (key.series != series_id || key.origin != origin || key.horizon != horizon) {
      break;
    }
    teams.push_back(key.team);
  }
  return teams;
}

namespace {

// Howard Hinnant's civil-date algorithms.
long days_from_civil(long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

void civil_from_days(long z, long& y, unsigned& m, unsigned& d) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

}  // namespace

long days_from_iso_date(const std::string& iso) {
  long y = 0;
  unsigned m = 0, d = 0;
  char extra = 0;
  if (std::sscanf(iso.c_str(), "%ld-%u-%u%c", &y, &m, &d, &extra) != 3 ||
      iso.size() != 10 || m < 1 || m > 12 || d < 1 || d > 31) {
    fail("invalid-input", "bad ISO-8601 date: " + iso);
  }
  return days_from_civil(y, m, d);
}

std::string iso_date_from_days(long days) {
  long y = 0;
  unsigned m = 0, d = 0;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04ld-%02u-%02u", y, m, d);
  return buf;
}

std::string date_add_days(const std::string& iso, long days) {
  return iso_date_from_days(days_from_iso_date(iso) + days);
}

}  // namespace angpool
