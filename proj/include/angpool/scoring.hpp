#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "angpool/cdf.hpp"

namespace angpool {

// Pinball loss in the 2(alpha - I{x <= q})(x - q) convention. Zero iff q = x.
double quantile_score(double alpha, double q, double x);

// Mean quantile score over the given probability levels.
double mqs(const PiecewiseLinearCdf& cdf, double x, std::span<const double> levels);

// Winkler score of the central (1 - alpha) interval [l, u]:
// (u - l) + (2/alpha) I{x <= l}(l - x) + (2/alpha) I{x >= u}(x - u).
double interval_score(double alpha, double l, double u, double x);

// Exact continuous ranked probability score: the integral of
// (F(x) - 1{x > z})^2, done segment by segment in closed form.
double crps(const PiecewiseLinearCdf& cdf, double z);

// 100 * (1 - geometric mean of method/benchmark score ratios). Pairs with a
// zero benchmark score are excluded; excluded_pairs reports how many.
double skill_score(std::span<const double> method_scores,
                   std::span<const double> benchmark_scores,
                   std::size_t* excluded_pairs = nullptr);

// For each level, the fraction of observations at or below that quantile of
// their forecast. A calibrated stream converges to the diagonal.
std::vector<std::pair<double, double>> reliability_data(
    std::span<const PiecewiseLinearCdf> cdfs, std::span<const double> observations,
    std::span<const double> levels);

// Fraction of observations inside the central (1 - alpha) interval,
// endpoints inclusive.
double interval_coverage(std::span<const PiecewiseLinearCdf> cdfs,
                         std::span<const double> observations, double alpha);

}  // namespace angpool
