#include <filesystem>
#include <sstream>

#include <doctest.h>

#include "angpool/combine.hpp"
#include "angpool/error.hpp"
#include "angpool/ingest.hpp"
#include "angpool/json_io.hpp"
#include "angpool/math.hpp"

using namespace angpool;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  write_text_file(path.string(), content);
  return path.string();
}

std::string full_forecast_csv(const std::string& origin, const std::string& target_end,
                              const std::string& location, double base) {
  std::ostringstream out;
  out << "forecast_date,target,target_end_date,location,type,quantile,value\n";
  out << origin << ",1 wk ahead inc death," << target_end << ',' << location
      << ",point,," << base + 50.0 << "\n";
  for (const double level : hub_levels()) {
    out << origin << ",1 wk ahead inc death," << target_end << ',' << location
        << ",quantile," << level << ',' << base + 100.0 * level << "\n";
  }
  return out.str();
}

}  // namespace

TEST_CASE("parsing one team's submission joins truth and ignores point rows") {
  const auto forecasts =
      temp_file("2020-06-06-TeamA-Mod.csv",
                full_forecast_csv("2020-06-06", "2020-06-13", "US", 10.0));
  const auto truth = temp_file("truth_one.csv", "date,location,value\n2020-06-13,US,42\n");
  const std::vector<std::string> files = {forecasts};
  const auto dataset = parse_hub_csv(files, truth);
  CHECK(dataset.series == std::vector<std::string>{"US"});
  CHECK(dataset.origins == std::vector<std::string>{"2020-06-06"});
  CHECK(dataset.max_horizon == 1);
  REQUIRE(dataset.forecasts.size() == 1);
  const auto& [key, qf] = *dataset.forecasts.begin();
  CHECK(key.team == "TeamA-Mod");  // from the file name, date prefix stripped
  CHECK(qf.levels == hub_levels());
  CHECK(qf.quantiles.front() == doctest::Approx(11.0));
  CHECK(dataset.truth.at({"US", "2020-06-13"}) == 42.0);
}

TEST_CASE("forecasts with missing levels or crossing quantiles are dropped") {
  std::ostringstream out;
  out << "forecast_date,target,target_end_date,location,type,quantile,value,team\n";
  const auto levels = hub_levels();
  // Team "short" misses the last level; team "crossed" crosses at the median.
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    out << "2020-06-06,1 wk ahead inc death,2020-06-13,US,quantile," << levels[i]
        << ',' << 10.0 + levels[i] << ",short\n";
  }
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double value = i == 11 ? 0.0 : 10.0 + levels[i];
    out << "2020-06-06,1 wk ahead inc death,2020-06-13,US,quantile," << levels[i]
        << ',' << value << ",crossed\n";
  }
  for (std::size_t i = 0; i < levels.size(); ++i) {
    out << "2020-06-06,1 wk ahead inc death,2020-06-13,US,quantile," << levels[i]
        << ',' << 10.0 + levels[i] << ",good\n";
  }
  const auto forecasts = temp_file("mixed_teams.csv", out.str());
  const auto truth = temp_file("truth_two.csv", "date,location,value\n2020-06-13,US,11\n");
  const std::vector<std::string> files = {forecasts};
  const auto dataset = parse_hub_csv(files, truth);
  CHECK(dataset.dropped_missing_levels == 1);
  CHECK(dataset.dropped_crossing == 1);
  CHECK(dataset.warnings.size() == 2);
  REQUIRE(dataset.forecasts.size() == 1);
  CHECK(dataset.forecasts.begin()->first.team == "good");
}

TEST_CASE("malformed rows report the file and line number") {
  const std::string csv =
      "forecast_date,target,target_end_date,location,type,quantile,value\n"
      "2020-06-06,1 wk ahead inc death,2020-06-13,US,quantile,0.5,12\n"
      "2020-06-06,1 wk ahead inc death,2020-06-13,US,quantile,0.6,oops\n";
  const auto forecasts = temp_file("bad_number.csv", csv);
  const auto truth = temp_file("truth_three.csv", "date,location,value\n");
  const std::vector<std::string> files = {forecasts};
  try {
    parse_hub_csv(files, truth);
    FAIL("expected a malformed-row error");
  } catch (const Error& e) {
    CHECK(e.code() == "malformed-row");
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
}

TEST_CASE("unparseable targets and negative values are rejected") {
  const std::string bad_target =
      "forecast_date,target,target_end_date,location,type,quantile,value\n"
      "2020-06-06,next tuesday,2020-06-13,US,quantile,0.5,12\n";
  const auto truth = temp_file("truth_four.csv", "date,location,value\n");
  const std::vector<std::string> f1 = {temp_file("bad_target.csv", bad_target)};
  CHECK_THROWS_AS(parse_hub_csv(f1, truth), Error);

  const std::string negative =
      "forecast_date,target,target_end_date,location,type,quantile,value\n"
      "2020-06-06,1 wk ahead inc death,2020-06-13,US,quantile,0.5,-3\n";
  const std::vector<std::string> f2 = {temp_file("negative.csv", negative)};
  CHECK_THROWS_AS(parse_hub_csv(f2, truth), Error);
}

TEST_CASE("parse -> serialize -> parse is the identity") {
  SyntheticSpec spec;
  spec.k = 3;
  spec.means = {45.0, 50.0, 55.0};
  spec.sds = {8.0, 10.0, 12.0};
  spec.truth_mean = 51.0;
  spec.truth_sd = 10.0;
  spec.seed = 77;
  spec.series = "S1";
  const auto dataset = generate_synthetic(spec, 6, 2);

  std::ostringstream fbuf, tbuf;
  write_forecast_csv(fbuf, dataset);
  write_truth_csv(tbuf, dataset);
  const auto forecasts = temp_file("round_forecasts.csv", fbuf.str());
  const auto truth = temp_file("round_truth.csv", tbuf.str());
  const std::vector<std::string> files = {forecasts};
  const auto reparsed = parse_hub_csv(files, truth);

  CHECK(reparsed.series == dataset.series);
  CHECK(reparsed.origins == dataset.origins);
  CHECK(reparsed.max_horizon == dataset.max_horizon);
  CHECK(reparsed.target_dates == dataset.target_dates);
  CHECK(reparsed.truth == dataset.truth);
  REQUIRE(reparsed.forecasts.size() == dataset.forecasts.size());
  for (const auto& [key, qf] : dataset.forecasts) {
    const auto& other = reparsed.forecasts.at(key);
    CHECK(other.levels == qf.levels);
    CHECK(other.quantiles == qf.quantiles);
  }

  // And serializing the reparsed dataset reproduces the bytes.
  std::ostringstream fbuf2;
  write_forecast_csv(fbuf2, reparsed);
  CHECK(fbuf2.str() == fbuf.str());
}

TEST_CASE("synthetic generation is deterministic and hits the fixture values") {
  SyntheticSpec spec;
  spec.k = 2;
  spec.means = {-0.15, 0.15};
  spec.sds = {0.1, 0.1};
  spec.seed = 9;
  const auto a = generate_synthetic(spec, 4, 2);
  const auto b = generate_synthetic(spec, 4, 2);
  CHECK(a.truth == b.truth);
  REQUIRE(a.forecasts.size() == b.forecasts.size());

  const auto& qf = a.forecasts.begin()->second;
  for (std::size_t i = 0; i < qf.levels.size(); ++i) {
    CHECK(qf.quantiles[i] ==
          doctest::Approx(-0.15 + 0.1 * normal_quantile(qf.levels[i])).epsilon(1e-12));
  }
}

TEST_CASE("identical members collapse under horizontal averaging") {
  const auto cdf = cdf_from_quantiles(gaussian_quantile_forecast(0.2, 0.1));
  const PiecewiseLinearCdf members[] = {cdf, cdf};
  CHECK(sup_distance(horizontal_combine(members, Aggregator::mean()), cdf) <= 1e-14);
}

TEST_CASE("date arithmetic") {
  CHECK(date_add_days("2020-06-06", 7) == "2020-06-13");
  CHECK(date_add_days("2020-12-31", 7) == "2021-01-07");
  CHECK(date_add_days("2020-02-27", 7) == "2020-03-05");  // leap year
  CHECK_THROWS_AS(days_from_iso_date("06/06/2020"), Error);
}

TEST_CASE("merging datasets requires disjoint series") {
  SyntheticSpec spec;
  spec.k = 2;
  spec.means = {-0.5, 0.5};
  spec.sds = {1.0, 1.0};
  spec.series = "A";
  const auto a = generate_synthetic(spec, 3, 1);
  spec.series = "B";
  spec.seed = 2;
  const auto b = generate_synthetic(spec, 3, 1);
  const ForecastDataset parts[] = {a, b};
  const auto merged = merge_datasets(parts);
  CHECK(merged.series == std::vector<std::string>{"A", "B"});
  CHECK(merged.forecasts.size() == a.forecasts.size() + b.forecasts.size());
  const ForecastDataset clash[] = {a, a};
  CHECK_THROWS_AS(merge_datasets(clash), Error);
}

TEST_CASE("CDF JSON round trip") {
  const auto cdf = cdf_from_quantiles(gaussian_quantile_forecast(3.0, 1.5));
  const auto back = cdf_from_json(cdf_to_json(cdf));
  REQUIRE(back.knots().size() == cdf.knots().size());
  for (std::size_t i = 0; i < back.knots().size(); ++i) {
    CHECK(back.knots()[i].x == cdf.knots()[i].x);
    CHECK(back.knots()[i].p == cdf.knots()[i].p);
  }
  CHECK_THROWS_AS(cdf_from_json("{\"knots\": [[0, 0]]}"), Error);
  CHECK_THROWS_AS(cdf_from_json("not json"), Error);
}
