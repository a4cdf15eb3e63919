#include "angpool/cdf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "angpool/error.hpp"

namespace angpool {

const std::vector<double>& hub_levels() {
  static const std::vector<double> levels = {
      0.01, 0.025, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50,
      0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 0.975, 0.99};
  return levels;
}

void QuantileForecast::validate() const {
  if (levels.size() < 2) {
    fail("invalid-input", "quantile forecast needs at least 2 levels");
  }
  if (levels.size() != quantiles.size()) {
    fail("invalid-input", "levels and quantiles differ in length");
  }
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!std::isfinite(levels[i]) || levels[i] <= 0.0 || levels[i] >= 1.0) {
      fail("invalid-input", "probability levels must lie strictly in (0,1)");
    }
    if (!std::isfinite(quantiles[i])) {
      fail("invalid-input", "quantiles must be finite");
    }
    if (i > 0 && levels[i] <= levels[i - 1]) {
      fail("invalid-input", "probability levels must be strictly increasing");
    }
    if (i > 0 && quantiles[i] < quantiles[i - 1]) {
      fail("invalid-input", "crossing quantiles: values must be nondecreasing");
    }
  }
}

PiecewiseLinearCdf::PiecewiseLinearCdf(std::vector<Knot> knots)
    : knots_(std::move(knots)) {
  if (knots_.size() < 2) {
    fail("invalid-input", "a CDF needs at least 2 knots");
  }
  if (knots_.front().p != 0.0 || knots_.back().p != 1.0) {
    fail("invalid-input", "knot probabilities must run from 0 to 1");
  }
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i].x) || !std::isfinite(knots_[i].p)) {
      fail("invalid-input", "knots must be finite");
    }
    if (i > 0) {
      if (knots_[i].p <= knots_[i - 1].p) {
        fail("invalid-input", "knot probabilities must be strictly increasing");
      }
      if (knots_[i].x < knots_[i - 1].x) {
        fail("invalid-input", "knot x values must be nondecreasing");
      }
    }
  }
}

double PiecewiseLinearCdf::eval(double x, FlatRule rule) const {
  if (x < knots_.front().x) return 0.0;
  if (x > knots_.back().x) return 1.0;
  const auto it = std::lower_bound(
      knots_.begin(), knots_.end(), x,
      [](const Knot& k, double value) { return k.x < value; });
  std::size_t i = static_cast<std::size_t>(it - knots_.begin());
  if (i < knots_.size() && knots_[i].x == x) {
    std::size_t j = i;
    while (j + 1 < knots_.size() && knots_[j + 1].x == x) ++j;
    if (i == j) return knots_[i].p;
    switch (rule) {
      case FlatRule::lower:
        return knots_[i].p;
      case FlatRule::upper:
        return knots_[j].p;
      case FlatRule::midpoint:
        return 0.5 * (knots_[i].p + knots_[j].p);
    }
  }
  // Interior of a segment with positive width.
  const Knot& a = knots_[i - 1];
  const Knot& b = knots_[i];
  const double t = (x - a.x) / (b.x - a.x);
  return a.p + t * (b.p - a.p);
}

double PiecewiseLinearCdf::inverse(double alpha) const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    fail("invalid-input", "inverse: probability level must lie in [0,1]");
  }
  const auto it = std::lower_bound(
      knots_.begin(), knots_.end(), alpha,
      [](const Knot& k, double value) { return k.p < value; });
  const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
  if (knots_[i].p == alpha) return knots_[i].x;
  const Knot& a = knots_[i - 1];
  const Knot& b = knots_[i];
  const double t = (alpha - a.p) / (b.p - a.p);
  return a.x + t * (b.x - a.x);
}

Moments PiecewiseLinearCdf::moments() const {
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    const double xa = knots_[i - 1].x;
    const double xb = knots_[i].x;
    const double dp = knots_[i].p - knots_[i - 1].p;
    mean += 0.5 * (xa + xb) * dp;
    m2 += (xa * xa + xa * xb + xb * xb) / 3.0 * dp;
  }
  Moments out;
  out.mean = mean;
  out.second_moment = m2;
  out.variance = std::max(0.0, m2 - mean * mean);
  return out;
}

double PiecewiseLinearCdf::density_at(double x) const {
  if (x <= knots_.front().x || x >= knots_.back().x) {
    fail("undefined-density", "density undefined at or outside the support boundary");
  }
  const auto it = std::lower_bound(
      knots_.begin(), knots_.end(), x,
      [](const Knot& k, double value) { return k.x < value; });
  const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
  if (knots_[i].x == x) {
    fail("undefined-density", "density undefined at a knot or inside a jump");
  }
  const Knot& a = knots_[i - 1];
  const Knot& b = knots_[i];
  return (b.p - a.p) / (b.x - a.x);
}

ScaledFrame::ScaledFrame(double lo_in, double hi_in) : lo(lo_in), hi(hi_in) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
    fail("invalid-input", "scaled frame needs finite bounds with hi > lo");
  }
}

ScaledFrame ScaledFrame::around(std::span<const PiecewiseLinearCdf> cdfs) {
  if (cdfs.empty()) fail("invalid-input", "cannot build a frame around no CDFs");
  double lo = cdfs.front().support_lo();
  double hi = cdfs.front().support_hi();
  for (const auto& cdf : cdfs) {
    lo = std::min(lo, cdf.support_lo());
    hi = std::max(hi, cdf.support_hi());
  }
  if (!(hi > lo)) {
    fail("invalid-input", "degenerate frame: combined supports have zero width");
  }
  return {lo, hi};
}

AngledLine::AngledLine(double theta_deg_in, double anchor_in)
    : theta_deg(theta_deg_in), anchor(anchor_in) {
  if (!(theta_deg >= 0.0 && theta_deg <= 90.0)) {
    fail("invalid-angle", "angle must lie in [0, 90] degrees");
  }
  if (!(anchor >= 0.0 && anchor <= 1.0)) {
    fail("invalid-input", "line anchor must lie on the unit-box diagonal");
  }
}

PiecewiseLinearCdf cdf_from_quantiles(const QuantileForecast& qf) {
  qf.validate();
  const auto& q = qf.quantiles;
  const std::size_t n = q.size();
  double lb = q.front() - (q[1] - q.front());
  if (lb < 0.0 && q.front() >= 0.0) lb = 0.0;  // zero clip for nonnegative data
  const double ub = q.back() + (q.back() - q[n - 2]);
  if (!(ub > lb)) {
    fail("degenerate-support", "all quantiles equal: zero-width support");
  }
  std::vector<Knot> knots;
  knots.reserve(n + 2);
  knots.push_back({lb, 0.0});
  for (std::size_t i = 0; i < n; ++i) knots.push_back({q[i], qf.levels[i]});
  knots.push_back({ub, 1.0});
  return PiecewiseLinearCdf(std::move(knots));
}

Knot intersect_line(const PiecewiseLinearCdf& cdf, const AngledLine& line,
                    const ScaledFrame& frame) {
  const double d = line.anchor;
  if (line.theta_deg == 0.0) {
    return {cdf.inverse(d), d};
  }
  if (line.theta_deg == 90.0) {
    const double x = frame.from_unit(d);
    return {x, cdf.eval(x, FlatRule::midpoint)};
  }
  const double t = std::tan(line.theta_deg * std::numbers::pi / 180.0);
  const auto& knots = cdf.knots();
  const auto line_at = [&](double u) { return d - t * (u - d); };
  // g(u) = F(u) - line(u) is strictly increasing along the knot sequence;
  // find the first knot at or past the crossing.
  std::size_t j = knots.size();
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const double u = frame.to_unit(knots[i].x);
    if (knots[i].p - line_at(u) >= 0.0) {
      j = i;
      break;
    }
  }
  if (j == knots.size()) {
    // Crossing in the flat extension at p = 1: solve 1 = d - t(u - d).
    const double u = d + (d - 1.0) / t;
    return {frame.from_unit(u), 1.0};
  }
  if (j == 0) {
    // Crossing in the flat extension at p = 0: solve 0 = d - t(u - d).
    const double u = d * (1.0 + 1.0 / t);
    return {frame.from_unit(u), 0.0};
  }
  const double ua = frame.to_unit(knots[j - 1].x);
  const double ub = frame.to_unit(knots[j].x);
  const double pa = knots[j - 1].p;
  const double pb = knots[j].p;
  if (ub == ua) {
    // The line crosses inside the jump.
    const double p = std::clamp(line_at(ua), pa, pb);
    return {frame.from_unit(ua), p};
  }
  const double s = (pb - pa) / (ub - ua);
  double u = (d * (1.0 + t) - pa + s * ua) / (s + t);
  u = std::clamp(u, ua, ub);
  const double p = std::clamp(line_at(u), pa, pb);
  return {frame.from_unit(u), p};
}

PiecewiseLinearCdf link_transform(const PiecewiseLinearCdf& cdf, double theta_deg,
                                  const ScaledFrame& frame, LinkDirection direction) {
  if (!(theta_deg > 0.0 && theta_deg <= 90.0)) {
    fail("invalid-angle", "link transform needs an angle in (0, 90] degrees");
  }
  const double shift =
      theta_deg == 90.0
          ? 0.0
          : frame.width() / std::tan(theta_deg * std::numbers::pi / 180.0);
  std::vector<Knot> knots = cdf.knots();
  if (direction == LinkDirection::forward) {
    for (auto& k : knots) k.x += shift * k.p;
    return PiecewiseLinearCdf(std::move(knots));
  }
  const double snap_tol = 1e-12 * std::max(1.0, frame.width());
  for (auto& k : knots) k.x -= shift * k.p;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (knots[i].x < knots[i - 1].x) {
      if (knots[i - 1].x - knots[i].x > snap_tol) {
        fail("non-monotone-result",
             "inverse link transform produced decreasing knots; the input was "
             "not in the image of the forward transform");
      }
      knots[i].x = knots[i - 1].x;
    }
  }
  return PiecewiseLinearCdf(std::move(knots));
}

double sup_distance(const PiecewiseLinearCdf& a, const PiecewiseLinearCdf& b) {
  std::vector<double> xs;
  xs.reserve(a.knots().size() + b.knots().size());
  for (const auto& k : a.knots()) xs.push_back(k.x);
  for (const auto& k : b.knots()) xs.push_back(k.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double worst = 0.0;
  for (const double x : xs) {
    worst = std::max(worst, std::fabs(a.eval(x) - b.eval(x)));
  }
  return worst;
}

}  // namespace angpool
