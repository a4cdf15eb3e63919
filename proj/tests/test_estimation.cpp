#include <cmath>
#include <functional>

#include <doctest.h>

#include "angpool/combine.hpp"
#include "angpool/error.hpp"
#include "angpool/estimation.hpp"
#include "angpool/ingest.hpp"
#include "angpool/math.hpp"
#include "angpool/scoring.hpp"

using namespace angpool;

namespace {

std::vector<InSampleRecord> records_for(const std::string& team,
                                        std::initializer_list<double> scores) {
  std::vector<InSampleRecord> records;
  int day = 0;
  for (const double s : scores) {
    records.push_back({team, "2020-06-" + std::to_string(10 + day), 1, s});
    ++day;
  }
  return records;
}

std::vector<PiecewiseLinearCdf> gaussian_members(const std::vector<double>& means,
                                                 const std::vector<double>& sds) {
  std::vector<PiecewiseLinearCdf> members;
  for (std::size_t i = 0; i < means.size(); ++i) {
    members.push_back(cdf_from_quantiles(gaussian_quantile_forecast(means[i], sds[i])));
  }
  return members;
}

// Cells whose members are fixed Gaussians and whose truths sweep the
// quantiles of a target distribution, giving a deterministic, perfectly
// calibrated in-sample stream.
std::vector<HistoryCell> swept_cells(std::vector<PiecewiseLinearCdf> members,
                                     const PiecewiseLinearCdf& truth_cdf,
                                     int n_cells) {
  std::vector<HistoryCell> cells;
  for (int j = 0; j < n_cells; ++j) {
    HistoryCell cell;
    cell.cdfs = members;
    cell.truth = truth_cdf.inverse((j + 0.5) / n_cells);
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::vector<HistoryCell> calibrated_cells(const std::vector<double>& means,
                                          const std::vector<double>& sds,
                                          double truth_mean, double truth_sd,
                                          int n_cells) {
  return swept_cells(gaussian_members(means, sds),
                     cdf_from_quantiles(gaussian_quantile_forecast(truth_mean, truth_sd)),
                     n_cells);
}

}  // namespace

TEST_CASE("inverse-MQS weights are exact") {
  std::vector<InSampleRecord> records;
  for (const auto& [team, score] :
       std::initializer_list<std::pair<const char*, double>>{
           {"a", 1.0}, {"b", 2.0}, {"c", 4.0}}) {
    for (int day = 0; day < 6; ++day) {
      records.push_back({team, "2020-06-" + std::to_string(10 + day), 1, score});
    }
  }
  const std::vector<std::string> teams = {"a", "b", "c"};
  const auto weights = estimate_weights(records, teams);
  CHECK(weights[0] == 4.0 / 7.0);
  CHECK(weights[1] == 2.0 / 7.0);
  CHECK(weights[2] == 1.0 / 7.0);
}

TEST_CASE("teams with short history get the mean of the others") {
  std::vector<InSampleRecord> records;
  for (int day = 0; day < 6; ++day) {
    records.push_back({"long_a", "2020-06-" + std::to_string(10 + day), 1, 2.0});
    records.push_back({"long_b", "2020-06-" + std::to_string(10 + day), 1, 4.0});
  }
  const auto short_records = records_for("short", {3.0, 3.0, 3.0});
  records.insert(records.end(), short_records.begin(), short_records.end());
  const std::vector<std::string> teams = {"long_a", "long_b", "short"};
  const auto weights = estimate_weights(records, teams);
  // short's assumed mean MQS is (2 + 4) / 2 = 3.
  const double inv_sum = 1.0 / 2.0 + 1.0 / 4.0 + 1.0 / 3.0;
  CHECK(weights[2] == doctest::Approx((1.0 / 3.0) / inv_sum).epsilon(1e-14));
}

TEST_CASE("weight estimation fallbacks and invariances") {
  const std::vector<std::string> one = {"solo"};
  CHECK(estimate_weights(records_for("solo", {1, 2, 3, 4, 5, 6}), one)[0] == 1.0);

  // Nobody qualifies: equal weights.
  const std::vector<std::string> teams = {"a", "b"};
  const auto equal = estimate_weights(records_for("a", {1.0}), teams);
  CHECK(equal[0] == 0.5);
  CHECK(equal[1] == 0.5);

  // Scaling all scores by a common factor leaves the weights unchanged.
  Rng rng(61);
  std::vector<InSampleRecord> records;
  std::vector<std::string> names;
  for (int t = 0; t < 4; ++t) {
    names.push_back("team" + std::to_string(t));
    for (int day = 0; day < 8; ++day) {
      records.push_back({names.back(), "2020-07-" + std::to_string(10 + day), 1,
                         rng.uniform(0.5, 5.0)});
    }
  }
  const auto base = estimate_weights(records, names);
  double total = 0.0;
  for (const double w : base) {
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
    total += w;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  for (auto& record : records) record.mqs *= 7.25;
  const auto scaled = estimate_weights(records, names);
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(scaled[i] == doctest::Approx(base[i]).epsilon(1e-12));
  }
}

TEST_CASE("optimize_theta returns 0 when horizontal is in-sample perfect") {
  // The realized stream sweeps the horizontal pool's own quantiles, so the
  // horizontal combination scores as the true distribution.
  auto members = gaussian_members({-1.5, 1.5}, {0.6, 0.6});
  const auto target = horizontal_combine(members, Aggregator::mean());
  const auto cells = swept_cells(std::move(members), target, 1000);
  CHECK(optimize_theta(cells, hub_levels()) == 0);
}

TEST_CASE("optimize_theta returns 90 when vertical is in-sample perfect") {
  auto members = gaussian_members({-1.5, 1.5}, {0.6, 0.6});
  const auto target = vertical_combine(members, Aggregator::mean());
  const auto cells = swept_cells(std::move(members), target, 1000);
  CHECK(optimize_theta(cells, hub_levels()) == 90);
}

TEST_CASE("optimize_theta matches a brute-force oracle on a mixed history") {
  Rng rng(67);
  std::vector<HistoryCell> cells;
  for (int j = 0; j < 30; ++j) {
    HistoryCell cell;
    const double spread = j < 15 ? 0.4 : 1.2;
    const double sd = j < 15 ? 1.2 : 0.4;
    cell.cdfs = {cdf_from_quantiles(gaussian_quantile_forecast(-spread, sd)),
                 cdf_from_quantiles(gaussian_quantile_forecast(spread, sd))};
    cell.truth = rng.normal(0.0, 1.0);
    cells.push_back(std::move(cell));
  }
  const int chosen = optimize_theta(cells, hub_levels());

  int oracle = -1;
  double oracle_score = 0.0;
  for (int theta = 0; theta <= 90; ++theta) {
    double sum = 0.0;
    for (const auto& cell : cells) {
      const auto pooled = theta == 0
                              ? horizontal_combine(cell.cdfs, Aggregator::mean())
                              : angular_combine_exact(cell.cdfs, theta);
      sum += mqs(pooled, cell.truth, hub_levels());
    }
    if (oracle < 0 || sum / cells.size() < oracle_score) {
      oracle = theta;
      oracle_score = sum / cells.size();
    }
  }
  CHECK(chosen == oracle);
}

TEST_CASE("optimize_theta respects a single-candidate grid and rejects empties") {
  const auto cells = calibrated_cells({0.0}, {1.0}, 0.0, 1.0, 5);
  const int candidates[] = {37};
  CHECK(optimize_theta(cells, hub_levels(), candidates) == 37);
  CHECK_THROWS_AS(optimize_theta({}, hub_levels()), Error);
}

TEST_CASE("optimize_scalar: grid membership, ties, dominance") {
  const std::vector<double> grid = {0.25, 0.5, 0.75};
  const double flat = optimize_scalar([](double) { return 1.0; }, grid);
  CHECK(flat == 0.25);  // ties go to the smallest value
  const double chosen =
      optimize_scalar([](double g) { return std::fabs(g - 0.6); }, grid);
  CHECK(chosen == 0.5);
  CHECK_THROWS_AS(optimize_scalar([](double) { return 0.0; }, {}), Error);

  // Strict dominance at every cell selects the dominating method.
  const std::vector<double> cell_scores_a = {1.0, 2.0, 3.0};
  const std::vector<double> cell_scores_b = {1.5, 2.5, 3.5};
  const std::vector<double> binary_grid = {0.0, 1.0};
  const double pick = optimize_scalar(
      [&](double which) {
        const auto& scores = which == 0.0 ? cell_scores_a : cell_scores_b;
        double sum = 0.0;
        for (const double s : scores) sum += s;
        return sum / scores.size();
      },
      binary_grid);
  CHECK(pick == 0.0);
}

TEST_CASE("gamma grid prefers the identity on a calibrated stream") {
  // The realized stream sweeps the vertical pool's own quantiles, so
  // recalibrating the pool cannot beat leaving it alone.
  auto members = gaussian_members({-0.3, 0.3}, {0.9, 1.1});
  const auto pool = vertical_combine(members, Aggregator::mean());
  const auto cells = swept_cells(std::move(members), pool, 200);
  const auto pool_of = [&](const HistoryCell& cell) {
    return vertical_combine(cell.cdfs, Aggregator::mean());
  };
  const double gamma = optimize_scalar(
      [&](double g) {
        RecalibrationParams params = RecalibrationParams::with_hub_bins(g);
        double sum = 0.0;
        for (const auto& cell : cells) {
          sum += mqs(recalibrate(pool_of(cell), params), cell.truth, hub_levels());
        }
        return sum / cells.size();
      },
      std::vector<double>{0.5, 1.0, 2.0});
  CHECK(gamma == 1.0);
}

TEST_CASE("trim fraction: one gross outlier, oracle agreement") {
  std::vector<double> means = {-0.2, -0.1, 0.1, 0.2, 8.0};
  std::vector<double> sds = {1.0, 1.0, 1.0, 1.0, 1.0};
  const auto cells = calibrated_cells(means, sds, 0.0, 1.0, 60);
  const std::vector<double> grid = {0.0, 0.2, 0.4};
  const auto objective = [&](double fraction) {
    double sum = 0.0;
    for (const auto& cell : cells) {
      try {
        const auto subset = trim_by_mean(cell.cdfs, TrimKind::exterior, fraction);
        sum += mqs(vertical_combine(subset, Aggregator::mean()), cell.truth,
                   hub_levels());
      } catch (const Error&) {
        return 1e100;
      }
    }
    return sum / cells.size();
  };
  const double chosen = optimize_scalar(objective, grid);
  double oracle = grid[0];
  for (const double g : grid) {
    if (objective(g) < objective(oracle)) oracle = g;
  }
  CHECK(chosen == oracle);
  CHECK(chosen > 0.0);  // trimming must remove the outlier
}

TEST_CASE("secondary weight goes to the dominant pool") {
  // The realized stream is exactly horizontal-pool distributed, so the
  // secondary combination should put all weight on the horizontal side.
  auto members = gaussian_members({-1.2, 1.2}, {0.5, 0.5});
  const auto target = horizontal_combine(members, Aggregator::mean());
  const auto cells = swept_cells(std::move(members), target, 100);
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i * 0.05);
  const double w = optimize_scalar(
      [&](double w_try) {
        double sum = 0.0;
        for (const auto& cell : cells) {
          const auto h = horizontal_combine(cell.cdfs, Aggregator::mean());
          const auto v = vertical_combine(cell.cdfs, Aggregator::mean());
          sum += mqs(secondary_combine(h, v, w_try, Direction::vertical), cell.truth,
                     hub_levels());
        }
        return sum / cells.size();
      },
      grid);
  CHECK(w == 1.0);
}

TEST_CASE("beta grid: identity when calibrated, sharpening when overdispersed") {
  const auto objective_on = [](const std::vector<HistoryCell>& cells) {
    return [&cells](double a, double b) {
      double sum = 0.0;
      for (const auto& cell : cells) {
        sum += mqs(beta_pool(cell.cdfs, {}, {a, b}), cell.truth, hub_levels());
      }
      return sum / cells.size();
    };
  };
  const std::vector<double> grid = {0.5, 1.0, 2.0, 4.0};

  const auto calibrated = calibrated_cells({0.0}, {1.0}, 0.0, 1.0, 200);
  const auto [a_cal, b_cal] = optimize_beta(objective_on(calibrated), grid, grid);
  CHECK(a_cal == 1.0);
  CHECK(b_cal == 1.0);

  const auto overdispersed = calibrated_cells({-0.2, 0.2}, {2.0, 2.0}, 0.0, 0.6, 200);
  const auto [a_od, b_od] = optimize_beta(objective_on(overdispersed), grid, grid);
  CHECK(a_od > 1.0);
  CHECK(b_od > 1.0);

  const std::vector<double> single = {1.5};
  const auto [a_one, b_one] =
      optimize_beta([](double, double) { return 1.0; }, single, single);
  CHECK(a_one == 1.5);
  CHECK(b_one == 1.5);
}
