#include "angpool/combine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "angpool/error.hpp"
#include "angpool/math.hpp"

namespace angpool {

Aggregator Aggregator::weighted(std::vector<double> w) {
  Aggregator agg;
  agg.kind = AggregatorKind::weighted;
  agg.weights = std::move(w);
  return agg;
}

Aggregator Aggregator::median() {
  Aggregator agg;
  agg.kind = AggregatorKind::median;
  return agg;
}

Aggregator Aggregator::trimmed(TrimKind kind, double fraction) {
  Aggregator agg;
  agg.kind = AggregatorKind::trimmed;
  agg.trim_kind = kind;
  agg.trim_fraction = fraction;
  return agg;
}

void Aggregator::validate(std::size_t k) {
  if (kind == AggregatorKind::weighted) {
    if (weights.size() != k) {
      fail("invalid-input", "weight count must match the number of forecasts");
    }
    double sum = 0.0;
    for (const double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        fail("invalid-input", "weights must be finite and nonnegative");
      }
      sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-6 || sum <= 0.0) {
      fail("invalid-input", "weights must sum to 1");
    }
    for (double& w : weights) w /= sum;
  }
  if (kind == AggregatorKind::trimmed) {
    if (!(trim_fraction >= 0.0 && trim_fraction < 1.0)) {
      fail("invalid-fraction", "trim fraction must lie in [0, 1)");
    }
  }
}

void CombinationSpec::validate(std::size_t k) {
  if (k == 0) fail("invalid-input", "cannot combine an empty forecast list");
  if (direction == Direction::angular &&
      !(theta_deg >= 0.0 && theta_deg <= 90.0)) {
    fail("invalid-angle", "angle must lie in [0, 90] degrees");
  }
  if (grid_points < 2) fail("invalid-input", "grid needs at least 2 points");
  aggregator.validate(k);
}

namespace {

double aggregate(std::vector<double>& values, const Aggregator& agg) {
  switch (agg.kind) {
    case AggregatorKind::mean: {
      double sum = std::accumulate(values.begin(), values.end(), 0.0);
      return sum / static_cast<double>(values.size());
    }
    case AggregatorKind::weighted: {
      double sum = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        sum += agg.weights[i] * values[i];
      }
      return sum;
    }
    case AggregatorKind::median: {
      std::sort(values.begin(), values.end());
      const std::size_t n = values.size();
      if (n % 2 == 1) return values[n / 2];
      return 0.5 * (values[n / 2 - 1] + values[n / 2]);
    }
    case AggregatorKind::trimmed:
      break;
  }
  fail("invalid-input", "trimmed aggregation must select the subset first");
}

// Turns a monotone point cloud into a valid CDF: clamp probabilities,
// resolve flat runs, snap the endpoints to exactly 0 and 1.
//
// Flat p runs are quantile-function jumps. A run at p = 0 keeps its last
// point and a run at p = 1 its first (the flat extensions outside the
// support); an interior run collapses to the midpoint of its x range, the
// flat-segment dual of the midpoint rule used when reading jump CDFs.
PiecewiseLinearCdf finalize_knots(std::vector<Knot> pts) {
  if (pts.size() < 2) fail("internal-error", "too few combination points");
  const double span =
      std::max(1.0, std::fabs(pts.back().x - pts.front().x));
  const double x_tol = 1e-9 * span;
  for (auto& k : pts) k.p = std::clamp(k.p, 0.0, 1.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].p < pts[i - 1].p) pts[i].p = pts[i - 1].p;
    if (pts[i].x < pts[i - 1].x) {
      if (pts[i - 1].x - pts[i].x > x_tol) {
        fail("internal-error", "combination points are not monotone in x");
      }
      pts[i].x = pts[i - 1].x;
    }
  }
  std::vector<Knot> knots;
  knots.reserve(pts.size());
  std::size_t i = 0;
  while (i < pts.size()) {
    std::size_t j = i;
    while (j + 1 < pts.size() && pts[j + 1].p == pts[i].p) ++j;
    if (j == i) {
      knots.push_back(pts[i]);
    } else if (pts[i].p == 0.0) {
      knots.push_back(pts[j]);
    } else if (pts[i].p == 1.0) {
      knots.push_back(pts[i]);
    } else if (pts[i].x == pts[j].x) {
      knots.push_back(pts[i]);
    } else {
      knots.push_back({0.5 * (pts[i].x + pts[j].x), pts[i].p});
    }
    i = j + 1;
  }
  if (knots.front().p != 0.0) {
    if (knots.front().p <= 1e-9) {
      knots.front().p = 0.0;
    } else {
      knots.insert(knots.begin(), {knots.front().x, 0.0});
    }
  }
  if (knots.back().p != 1.0) {
    if (knots.back().p >= 1.0 - 1e-9) {
      knots.back().p = 1.0;
    } else {
      knots.push_back({knots.back().x, 1.0});
    }
  }
  return PiecewiseLinearCdf(std::move(knots));
}

std::vector<double> union_of_knot_x(std::span<const PiecewiseLinearCdf> cdfs) {
  std::vector<double> xs;
  for (const auto& cdf : cdfs) {
    for (const auto& k : cdf.knots()) xs.push_back(k.x);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

std::vector<double> union_of_knot_p(std::span<const PiecewiseLinearCdf> cdfs) {
  std::vector<double> ps;
  for (const auto& cdf : cdfs) {
    for (const auto& k : cdf.knots()) ps.push_back(k.p);
  }
  std::sort(ps.begin(), ps.end());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  return ps;
}

// Adds the x values where two member CDFs cross strictly inside a grid
// segment, so the pointwise order statistic stays piecewise linear.
void enrich_with_crossings_x(std::span<const PiecewiseLinearCdf> cdfs,
                             std::vector<double>& grid) {
  const std::size_t k = cdfs.size();
  if (k < 2) return;
  std::vector<double> extra;
  std::vector<double> va(k), vb(k);
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double a = grid[g - 1];
    const double b = grid[g];
    if (!(b > a)) continue;
    for (std::size_t i = 0; i < k; ++i) {
      va[i] = cdfs[i].eval(a, FlatRule::upper);
      vb[i] = cdfs[i].eval(b, FlatRule::lower);
    }
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        const double da = va[i] - va[j];
        const double db = vb[i] - vb[j];
        if ((da > 0.0 && db < 0.0) || (da < 0.0 && db > 0.0)) {
          extra.push_back(a + da / (da - db) * (b - a));
        }
      }
    }
  }
  grid.insert(grid.end(), extra.begin(), extra.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
}

void enrich_with_crossings_p(std::span<const PiecewiseLinearCdf> cdfs,
                             std::vector<double>& grid) {
  const std::size_t k = cdfs.size();
  if (k < 2) return;
  std::vector<double> extra;
  std::vector<double> va(k), vb(k);
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double a = grid[g - 1];
    const double b = grid[g];
    for (std::size_t i = 0; i < k; ++i) {
      va[i] = cdfs[i].inverse(a);
      vb[i] = cdfs[i].inverse(b);
    }
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        const double da = va[i] - va[j];
        const double db = vb[i] - vb[j];
        if ((da > 0.0 && db < 0.0) || (da < 0.0 && db > 0.0)) {
          extra.push_back(a + da / (da - db) * (b - a));
        }
      }
    }
  }
  grid.insert(grid.end(), extra.begin(), extra.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
}

void check_simple_aggregator(const Aggregator& agg) {
  if (agg.kind == AggregatorKind::trimmed) {
    fail("invalid-input", "trimmed aggregation must select the subset first");
  }
}

}  // namespace

PiecewiseLinearCdf vertical_combine(std::span<const PiecewiseLinearCdf> cdfs,
                                    const Aggregator& agg) {
  if (cdfs.empty()) fail("invalid-input", "cannot combine an empty forecast list");
  check_simple_aggregator(agg);
  const std::size_t k = cdfs.size();
  std::vector<double> grid = union_of_knot_x(cdfs);
  if (agg.kind == AggregatorKind::median) enrich_with_crossings_x(cdfs, grid);
  std::vector<Knot> pts;
  pts.reserve(2 * grid.size());
  std::vector<double> lo(k), hi(k);
  for (const double x : grid) {
    for (std::size_t i = 0; i < k; ++i) {
      lo[i] = cdfs[i].eval(x, FlatRule::lower);
      hi[i] = cdfs[i].eval(x, FlatRule::upper);
    }
    // aggregate may reorder its input; both buffers are refilled next round.
    const double alo = aggregate(lo, agg);
    const double ahi = aggregate(hi, agg);
    pts.push_back({x, alo});
    if (ahi > alo) pts.push_back({x, ahi});
  }
  return finalize_knots(std::move(pts));
}

PiecewiseLinearCdf horizontal_combine(std::span<const PiecewiseLinearCdf> cdfs,
                                      const Aggregator& agg) {
  if (cdfs.empty()) fail("invalid-input", "cannot combine an empty forecast list");
  check_simple_aggregator(agg);
  const std::size_t k = cdfs.size();
  std::vector<double> grid = union_of_knot_p(cdfs);
  if (agg.kind == AggregatorKind::median) enrich_with_crossings_p(cdfs, grid);
  std::vector<Knot> pts;
  pts.reserve(grid.size());
  std::vector<double> qs(k);
  for (const double p : grid) {
    for (std::size_t i = 0; i < k; ++i) qs[i] = cdfs[i].inverse(p);
    pts.push_back({aggregate(qs, agg), p});
  }
  return finalize_knots(std::move(pts));
}

PiecewiseLinearCdf angular_combine_grid(std::span<const PiecewiseLinearCdf> cdfs,
                                        double theta_deg, const Aggregator& agg,
                                        int m) {
  if (cdfs.empty()) fail("invalid-input", "cannot combine an empty forecast list");
  check_simple_aggregator(agg);
  if (m < 2) fail("invalid-input", "grid needs at least 2 points");
  if (!(theta_deg >= 0.0 && theta_deg <= 90.0)) {
    fail("invalid-angle", "angle must lie in [0, 90] degrees");
  }
  const std::size_t k = cdfs.size();
  const ScaledFrame frame = ScaledFrame::around(cdfs);
  // Intersection points are pooled in outcome units: mean, weighted, and
  // median aggregation all commute with the affine unscaling.
  std::vector<Knot> pts;
  pts.reserve(static_cast<std::size_t>(m));
  std::vector<double> xs(k), ps(k);
  for (int j = 0; j < m; ++j) {
    const double d = static_cast<double>(j) / static_cast<double>(m - 1);
    const AngledLine line(theta_deg, d);
    for (std::size_t i = 0; i < k; ++i) {
      const Knot pt = intersect_line(cdfs[i], line, frame);
      xs[i] = pt.x;
      ps[i] = pt.p;
    }
    pts.push_back({aggregate(xs, agg), aggregate(ps, agg)});
  }
  return finalize_knots(std::move(pts));
}

PiecewiseLinearCdf angular_combine_exact(std::span<const PiecewiseLinearCdf> cdfs,
                                         double theta_deg,
                                         std::span<const double> weights) {
  if (cdfs.empty()) fail("invalid-input", "cannot combine an empty forecast list");
  if (!(theta_deg > 0.0 && theta_deg <= 90.0)) {
    fail("invalid-angle", "exact angular route needs an angle in (0, 90] degrees");
  }
  Aggregator agg = weights.empty()
                       ? Aggregator::mean()
                       : Aggregator::weighted({weights.begin(), weights.end()});
  agg.validate(cdfs.size());
  if (theta_deg == 90.0) return vertical_combine(cdfs, agg);
  const ScaledFrame frame = ScaledFrame::around(cdfs);
  std::vector<PiecewiseLinearCdf> transformed;
  transformed.reserve(cdfs.size());
  for (const auto& cdf : cdfs) {
    transformed.push_back(
        link_transform(cdf, theta_deg, frame, LinkDirection::forward));
  }
  const PiecewiseLinearCdf pooled = vertical_combine(transformed, agg);
  return link_transform(pooled, theta_deg, frame, LinkDirection::inverse);
}

PiecewiseLinearCdf median_combine(std::span<const PiecewiseLinearCdf> cdfs,
                                  Direction direction, double theta_deg, int m) {
  if (cdfs.empty()) fail("invalid-input", "cannot combine an empty forecast list");
  switch (direction) {
    case Direction::vertical:
      return vertical_combine(cdfs, Aggregator::median());
    case Direction::horizontal:
      return horizontal_combine(cdfs, Aggregator::median());
    case Direction::angular:
      if (theta_deg == 0.0) return horizontal_combine(cdfs, Aggregator::median());
      if (theta_deg == 90.0) return vertical_combine(cdfs, Aggregator::median());
      return angular_combine_grid(cdfs, theta_deg, Aggregator::median(), m);
  }
  fail("invalid-input", "unknown direction");
}

std::vector<PiecewiseLinearCdf> trim_by_mean(std::span<const PiecewiseLinearCdf> cdfs,
                                             TrimKind kind, double fraction) {
  if (cdfs.empty()) fail("invalid-input", "cannot trim an empty forecast list");
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    fail("invalid-fraction", "trim fraction must lie in [0, 1)");
  }
  const std::size_t k = cdfs.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> means(k);
  for (std::size_t i = 0; i < k; ++i) means[i] = cdfs[i].moments().mean;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return means[a] < means[b]; });
  const auto r = static_cast<std::size_t>(
      std::lround(fraction * static_cast<double>(k) / 2.0));
  std::vector<std::size_t> kept;
  if (kind == TrimKind::exterior) {
    if (2 * r >= k) fail("invalid-fraction", "exterior trimming removed every forecast");
    kept.assign(order.begin() + static_cast<std::ptrdiff_t>(r),
                order.end() - static_cast<std::ptrdiff_t>(r));
  } else {
    if (r == 0) fail("invalid-fraction", "interior trimming kept no forecasts");
    const std::size_t keep_each = std::min(r, k);
    kept.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep_each));
    for (std::size_t i = k > r ? k - r : 0; i < k; ++i) kept.push_back(order[i]);
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  }
  std::sort(kept.begin(), kept.end());
  std::vector<PiecewiseLinearCdf> out;
  out.reserve(kept.size());
  for (const std::size_t idx : kept) out.push_back(cdfs[idx]);
  return out;
}

PiecewiseLinearCdf hv_switch(std::span<const PiecewiseLinearCdf> cdfs,
                             double in_sample_mqs_h, double in_sample_mqs_v,
                             const Aggregator& agg) {
  if (!std::isfinite(in_sample_mqs_h) || !std::isfinite(in_sample_mqs_v)) {
    fail("invalid-input", "switching scores must be finite");
  }
  Aggregator agg_copy = agg;
  agg_copy.validate(cdfs.size());
  if (in_sample_mqs_h <= in_sample_mqs_v) {
    return horizontal_combine(cdfs, agg_copy);
  }
  return vertical_combine(cdfs, agg_copy);
}

void BetaPoolParams::validate() const {
  if (!(a > 0.0) || !(b > 0.0)) {
    fail("invalid-input", "beta pool parameters must be strictly positive");
  }
}

PiecewiseLinearCdf beta_pool(std::span<const PiecewiseLinearCdf> cdfs,
                             std::span<const double> weights,
                             const BetaPoolParams& params) {
  params.validate();
  Aggregator agg = weights.empty()
                       ? Aggregator::mean()
                       : Aggregator::weighted({weights.begin(), weights.end()});
  agg.validate(cdfs.size());
  PiecewiseLinearCdf pool = vertical_combine(cdfs, agg);
  if (params.a == 1.0 && params.b == 1.0) return pool;
  std::vector<Knot> pts = pool.knots();
  for (auto& k : pts) k.p = incomplete_beta(k.p, params.a, params.b);
  return finalize_knots(std::move(pts));
}

RecalibrationParams RecalibrationParams::with_hub_bins(double gamma) {
  RecalibrationParams params;
  params.gamma = gamma;
  params.bin_edges.push_back(0.0);
  for (const double level : hub_levels()) params.bin_edges.push_back(level);
  params.bin_edges.push_back(1.0);
  return params;
}

void RecalibrationParams::validate() const {
  if (!(gamma > 0.0)) fail("invalid-input", "recalibration exponent must be positive");
  if (bin_edges.size() < 2 || bin_edges.front() != 0.0 || bin_edges.back() != 1.0) {
    fail("invalid-input", "bin edges must run from 0 to 1");
  }
  for (std::size_t i = 1; i < bin_edges.size(); ++i) {
    if (!(bin_edges[i] > bin_edges[i - 1])) {
      fail("invalid-input", "bin edges must be strictly increasing");
    }
  }
}

PiecewiseLinearCdf recalibrate(const PiecewiseLinearCdf& cdf,
                               const RecalibrationParams& params) {
  params.validate();
  if (params.gamma == 1.0) return cdf;
  const auto& edges = params.bin_edges;
  std::vector<double> cum(edges.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 1; j < edges.size(); ++j) {
    const double mass = edges[j] - edges[j - 1];
    total += mass > 0.0 ? std::pow(mass, params.gamma) : 0.0;
    cum[j] = total;
  }
  for (double& c : cum) c /= total;
  cum.front() = 0.0;
  cum.back() = 1.0;
  const auto remap = [&](double p) {
    const auto it = std::lower_bound(edges.begin(), edges.end(), p);
    const std::size_t j = static_cast<std::size_t>(it - edges.begin());
    if (j < edges.size() && edges[j] == p) return cum[j];
    const double t = (p - edges[j - 1]) / (edges[j] - edges[j - 1]);
    return cum[j - 1] + t * (cum[j] - cum[j - 1]);
  };
  std::vector<double> pgrid;
  pgrid.reserve(cdf.knots().size() + edges.size());
  for (const auto& k : cdf.knots()) pgrid.push_back(k.p);
  pgrid.insert(pgrid.end(), edges.begin(), edges.end());
  std::sort(pgrid.begin(), pgrid.end());
  pgrid.erase(std::unique(pgrid.begin(), pgrid.end()), pgrid.end());
  std::vector<Knot> pts;
  pts.reserve(pgrid.size());
  for (const double p : pgrid) pts.push_back({cdf.inverse(p), remap(p)});
  return finalize_knots(std::move(pts));
}

PiecewiseLinearCdf secondary_combine(const PiecewiseLinearCdf& cdf_h,
                                     const PiecewiseLinearCdf& cdf_v, double w,
                                     Direction direction) {
  if (!(w >= 0.0 && w <= 1.0)) {
    fail("invalid-input", "secondary combination weight must lie in [0, 1]");
  }
  if (direction == Direction::angular) {
    fail("invalid-input", "secondary combination is vertical or horizontal");
  }
  if (w == 1.0) return cdf_h;
  if (w == 0.0) return cdf_v;
  const PiecewiseLinearCdf members[] = {cdf_h, cdf_v};
  const Aggregator agg = Aggregator::weighted({w, 1.0 - w});
  if (direction == Direction::vertical) return vertical_combine(members, agg);
  return horizontal_combine(members, agg);
}

PiecewiseLinearCdf combine(std::span<const PiecewiseLinearCdf> cdfs,
                           CombinationSpec spec) {
  spec.validate(cdfs.size());
  std::vector<PiecewiseLinearCdf> subset;
  Aggregator agg = spec.aggregator;
  if (agg.kind == AggregatorKind::trimmed) {
    subset = trim_by_mean(cdfs, agg.trim_kind, agg.trim_fraction);
    cdfs = subset;
    agg = Aggregator::mean();
  }
  switch (spec.direction) {
    case Direction::vertical:
      return vertical_combine(cdfs, agg);
    case Direction::horizontal:
      return horizontal_combine(cdfs, agg);
    case Direction::angular:
      if (agg.kind == AggregatorKind::median) {
        return median_combine(cdfs, Direction::angular, spec.theta_deg,
                              spec.grid_points);
      }
      if (spec.theta_deg == 0.0) return horizontal_combine(cdfs, agg);
      return angular_combine_exact(cdfs, spec.theta_deg, agg.weights);
  }
  fail("invalid-input", "unknown direction");
}

}  // namespace angpool
