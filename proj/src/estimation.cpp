#include "angpool/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "angpool/error.hpp"
#include "angpool/scoring.hpp"

namespace angpool {

std::vector<double> estimate_weights(std::span<const InSampleRecord> records,
                                     std::span<const std::string> teams,
                                     int min_periods) {
  if (teams.empty()) fail("invalid-input", "weight estimation needs at least one team");
  struct TeamStats {
    std::set<std::string> origins;
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, TeamStats> stats;
  for (const auto& record : records) {
    if (!std::isfinite(record.mqs)) {
      fail("invalid-input", "in-sample MQS records must be finite");
    }
    auto& entry = stats[record.team];
    entry.origins.insert(record.origin);
    entry.sum += record.mqs;
    entry.n += 1;
  }
  const std::size_t k = teams.size();
  std::vector<double> mean_mqs(k, 0.0);
  std::vector<bool> qualifies(k, false);
  double qualified_sum = 0.0;
  std::size_t qualified_count = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto it = stats.find(teams[i]);
    if (it == stats.end()) continue;
    const auto& entry = it->second;
    if (entry.origins.size() >= static_cast<std::size_t>(min_periods)) {
      qualifies[i] = true;
      mean_mqs[i] = entry.sum / static_cast<double>(entry.n);
      qualified_sum += mean_mqs[i];
      ++qualified_count;
    }
  }
  if (qualified_count == 0) {
    // Fallback of the fallback: no team has enough history.
    return std::vector<double>(k, 1.0 / static_cast<double>(k));
  }
  const double fallback = qualified_sum / static_cast<double>(qualified_count);
  for (std::size_t i = 0; i < k; ++i) {
    if (!qualifies[i]) mean_mqs[i] = fallback;
  }
  // Inverse-proportional weights; a perfect (zero) score takes the whole
  // weight, split equally if several teams are perfect.
  std::vector<double> weights(k, 0.0);
  std::size_t zeros = 0;
  for (const double m : mean_mqs) {
    if (m == 0.0) ++zeros;
  }
  if (zeros > 0) {
    for (std::size_t i = 0; i < k; ++i) {
      weights[i] = mean_mqs[i] == 0.0 ? 1.0 / static_cast<double>(zeros) : 0.0;
    }
    return weights;
  }
  double inv_sum = 0.0;
  for (const double m : mean_mqs) inv_sum += 1.0 / m;
  for (std::size_t i = 0; i < k; ++i) weights[i] = 1.0 / mean_mqs[i] / inv_sum;
  return weights;
}

std::vector<int> default_theta_candidates() {
  std::vector<int> degrees(91);
  for (int i = 0; i <= 90; ++i) degrees[static_cast<std::size_t>(i)] = i;
  return degrees;
}

double mean_history_mqs(
    std::span<const HistoryCell> history, std::span<const double> levels,
    const std::function<PiecewiseLinearCdf(const HistoryCell&)>& pool) {
  if (history.empty()) fail("invalid-input", "empty fitting history");
  double sum = 0.0;
  for (const auto& cell : history) {
    sum += mqs(pool(cell), cell.truth, levels);
  }
  return sum / static_cast<double>(history.size());
}

int optimize_theta(std::span<const HistoryCell> history,
                   std::span<const double> levels,
                   std::span<const int> candidate_degrees) {
  if (history.empty()) fail("invalid-input", "empty fitting history");
  std::vector<int> candidates(candidate_degrees.begin(), candidate_degrees.end());
  if (candidates.empty()) candidates = default_theta_candidates();
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  int best = candidates.front();
  double best_score = 0.0;
  bool first = true;
  for (const int theta : candidates) {
    const double score = mean_history_mqs(
        history, levels, [theta](const HistoryCell& cell) {
          if (theta == 0) {
            const Aggregator agg = cell.weights.empty()
                                       ? Aggregator::mean()
                                       : Aggregator::weighted(cell.weights);
            return horizontal_combine(cell.cdfs, agg);
          }
          return angular_combine_exact(cell.cdfs, theta, cell.weights);
        });
    if (first || score < best_score) {
      first = false;
      best = theta;
      best_score = score;
    }
  }
  return best;
}

double optimize_scalar(const std::function<double(double)>& objective,
                       std::span<const double> grid) {
  if (grid.empty()) fail("invalid-input", "empty optimization grid");
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  double best = sorted.front();
  double best_score = 0.0;
  bool first = true;
  for (const double value : sorted) {
    const double score = objective(value);
    if (first || score < best_score) {
      first = false;
      best = value;
      best_score = score;
    }
  }
  return best;
}

std::pair<double, double> optimize_beta(
    const std::function<double(double, double)>& objective,
    std::span<const double> grid_a, std::span<const double> grid_b) {
  if (grid_a.empty() || grid_b.empty()) {
    fail("invalid-input", "empty optimization grid");
  }
  std::vector<double> as(grid_a.begin(), grid_a.end());
  std::vector<double> bs(grid_b.begin(), grid_b.end());
  std::sort(as.begin(), as.end());
  std::sort(bs.begin(), bs.end());
  const auto tie_key = [](double a, double b) {
    const double da = a - 1.0;
    const double db = b - 1.0;
    return std::make_tuple(da * da + db * db, a, b);
  };
  std::pair<double, double> best{as.front(), bs.front()};
  double best_score = 0.0;
  bool first = true;
  for (const double a : as) {
    for (const double b : bs) {
      const double score = objective(a, b);
      if (first || score < best_score ||
          (score == best_score && tie_key(a, b) < tie_key(best.first, best.second))) {
        first = false;
        best = {a, b};
        best_score = score;
      }
    }
  }
  return best;
}

}  // namespace angpool
