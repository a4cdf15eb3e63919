#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "angpool/combine.hpp"

namespace angpool {

// One in-sample score for one team at one (origin, horizon) cell.
struct InSampleRecord {
  std::string team;
  std::string origin;
  int horizon = 0;
  double mqs = 0.0;
};

// Inverse-MQS weights for the given team order. Teams with at least
// min_periods distinct scored origins get the mean of their scores; the
// rest are assigned the average of the qualifying teams' means. If no team
// qualifies, the weights are equal.
std::vector<double> estimate_weights(std::span<const InSampleRecord> records,
                                     std::span<const std::string> teams,
                                     int min_periods = 5);

// One historical cell used to fit combination parameters: the member CDFs,
// optional per-member weights (empty means simple averaging), and the
// realized observation.
struct HistoryCell {
  std::vector<PiecewiseLinearCdf> cdfs;
  std::vector<double> weights;
  double truth = 0.0;
};

std::vector<int> default_theta_candidates();  // 0..90 integer degrees

// Candidate angle with minimal mean in-sample MQS; ties go to the smallest
// angle. Cells with weights are pooled by the weighted exact route.
int optimize_theta(std::span<const HistoryCell> history,
                   std::span<const double> levels,
                   std::span<const int> candidate_degrees = {});

// Exhaustive grid argmin of an arbitrary scalar objective; ties go to the
// smallest grid value. Returns a grid member, never anything else.
double optimize_scalar(const std::function<double(double)>& objective,
                       std::span<const double> grid);

// Joint grid argmin; ties go to the (a, b) closest to (1, 1), then
// lexicographic.
std::pair<double, double> optimize_beta(
    const std::function<double(double, double)>& objective,
    std::span<const double> grid_a, std::span<const double> grid_b);

// Mean in-sample MQS of a combination method over history cells; the shared
// objective behind the optimizers above.
double mean_history_mqs(std::span<const HistoryCell> history,
                        std::span<const double> levels,
                        const std::function<PiecewiseLinearCdf(const HistoryCell&)>& pool);

}  // namespace angpool
