#include "angpool/scoring.hpp"

#include <cmath>

#include "angpool/error.hpp"

namespace angpool {

double quantile_score(double alpha, double q, double x) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail("invalid-input", "quantile score level must lie strictly in (0,1)");
  }
  const double indicator = x <= q ? 1.0 : 0.0;
  return 2.0 * (alpha - indicator) * (x - q);
}

double mqs(const PiecewiseLinearCdf& cdf, double x, std::span<const double> levels) {
  if (levels.empty()) fail("invalid-input", "mqs needs at least one level");
  double sum = 0.0;
  for (const double alpha : levels) {
    sum += quantile_score(alpha, cdf.inverse(alpha), x);
  }
  return sum / static_cast<double>(levels.size());
}

double interval_score(double alpha, double l, double u, double x) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail("invalid-input", "interval score level must lie strictly in (0,1)");
  }
  if (!(l <= u)) fail("invalid-input", "interval bounds must satisfy l <= u");
  double score = u - l;
  if (x <= l) score += 2.0 / alpha * (l - x);
  if (x >= u) score += 2.0 / alpha * (x - u);
  return score;
}

namespace {

// Integral of a squared linear function over a width, given its endpoint
// values: w * (va^2 + va*vb + vb^2) / 3.
double squared_linear_integral(double width, double va, double vb) {
  return width * (va * va + va * vb + vb * vb) / 3.0;
}

}  // namespace

double crps(const PiecewiseLinearCdf& cdf, double z) {
  const auto& knots = cdf.knots();
  double total = 0.0;
  if (z < knots.front().x) total += knots.front().x - z;
  if (z > knots.back().x) total += z - knots.back().x;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const double xa = knots[i - 1].x;
    const double xb = knots[i].x;
    if (!(xb > xa)) continue;
    const double pa = knots[i - 1].p;
    const double pb = knots[i].p;
    if (xb <= z) {
      total += squared_linear_integral(xb - xa, pa, pb);
    } else if (xa >= z) {
      total += squared_linear_integral(xb - xa, pa - 1.0, pb - 1.0);
    } else {
      const double pz = pa + (z - xa) / (xb - xa) * (pb - pa);
      total += squared_linear_integral(z - xa, pa, pz);
      total += squared_linear_integral(xb - z, pz - 1.0, pb - 1.0);
    }
  }
  return total;
}

double skill_score(std::span<const double> method_scores,
                   std::span<const double> benchmark_scores,
                   std::size_t* excluded_pairs) {
  if (method_scores.size() != benchmark_scores.size() || method_scores.empty()) {
    fail("invalid-input", "skill score needs matching nonempty score lists");
  }
  double log_sum = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < method_scores.size(); ++i) {
    const double b = benchmark_scores[i];
    const double m = method_scores[i];
    if (b == 0.0) {
      ++excluded;
      continue;
    }
    if (!(m > 0.0) || !(b > 0.0)) {
      fail("invalid-input", "skill score needs positive scores");
    }
    log_sum += std::log(m / b);
    ++used;
  }
  if (excluded_pairs != nullptr) *excluded_pairs = excluded;
  if (used == 0) fail("invalid-input", "no usable score pairs for the skill score");
  return 100.0 * (1.0 - std::exp(log_sum / static_cast<double>(used)));
}

std::vector<std::pair<double, double>> reliability_data(
    std::span<const PiecewiseLinearCdf> cdfs, std::span<const double> observations,
    std::span<const double> levels) {
  if (cdfs.empty() || cdfs.size() != observations.size()) {
    fail("invalid-input", "reliability needs matching nonempty forecast/observation lists");
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(levels.size());
  for (const double alpha : levels) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < cdfs.size(); ++i) {
      if (observations[i] <= cdfs[i].inverse(alpha)) ++hits;
    }
    out.emplace_back(alpha,
                     static_cast<double>(hits) / static_cast<double>(cdfs.size()));
  }
  return out;
}

double interval_coverage(std::span<const PiecewiseLinearCdf> cdfs,
                         std::span<const double> observations, double alpha) {
  if (cdfs.empty() || cdfs.size() != observations.size()) {
    fail("invalid-input", "coverage needs matching nonempty forecast/observation lists");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail("invalid-input", "coverage level must lie strictly in (0,1)");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < cdfs.size(); ++i) {
    const double l = cdfs[i].inverse(alpha / 2.0);
    const double u = cdfs[i].inverse(1.0 - alpha / 2.0);
    if (observations[i] >= l && observations[i] <= u) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(cdfs.size());
}

}  // namespace angpool
