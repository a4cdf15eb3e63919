#pragma once

#include <span>
#include <vector>

#include "angpool/cdf.hpp"

namespace angpool {

enum class Direction { vertical, horizontal, angular };

enum class AggregatorKind { mean, weighted, median, trimmed };

enum class TrimKind { exterior, interior };

struct Aggregator {
  AggregatorKind kind = AggregatorKind::mean;
  std::vector<double> weights;  // weighted only
  TrimKind trim_kind = TrimKind::exterior;
  double trim_fraction = 0.0;

  static Aggregator mean() { return {}; }
  static Aggregator weighted(std::vector<double> w);
  static Aggregator median();
  static Aggregator trimmed(TrimKind kind, double fraction);

  // Checks the aggregator against a combination of k forecasts; weighted
  // weights are normalized to sum exactly to 1.
  void validate(std::size_t k);
};

// direction x aggregator plus the grid size m used by the grid route.
struct CombinationSpec {
  Direction direction = Direction::vertical;
  double theta_deg = 0.0;  // angular only
  Aggregator aggregator;
  int grid_points = 1001;

  void validate(std::size_t k);
};

// Pointwise aggregation of CDF values on the union of all knot x values.
// Exact for mean/weighted; the median grid is enriched with pairwise
// crossing points so the order statistic is exact as well.
PiecewiseLinearCdf vertical_combine(std::span<const PiecewiseLinearCdf> cdfs,
                                    const Aggregator& agg);

// Aggregation of quantiles on the union of all knot p values.
PiecewiseLinearCdf horizontal_combine(std::span<const PiecewiseLinearCdf> cdfs,
                                      const Aggregator& agg);

// The numerical grid procedure: m evenly spaced anchors on the unit-box
// diagonal, one angled line per anchor, componentwise aggregation of the
// k intersection points.
PiecewiseLinearCdf angular_combine_grid(std::span<const PiecewiseLinearCdf> cdfs,
                                        double theta_deg, const Aggregator& agg,
                                        int m);

// The exact route: forward link transform, weighted vertical combine,
// inverse link transform. Empty weights mean the simple average. theta = 90
// reduces to vertical_combine exactly.
PiecewiseLinearCdf angular_combine_exact(std::span<const PiecewiseLinearCdf> cdfs,
                                         double theta_deg,
                                         std::span<const double> weights = {});

// Median combining along the chosen direction. For odd k all directions
// produce the same CDF (up to grid tolerance on the angular route).
PiecewiseLinearCdf median_combine(std::span<const PiecewiseLinearCdf> cdfs,
                                  Direction direction, double theta_deg = 45.0,
                                  int m = 1001);

// Keeps the middle-by-mean (exterior) or extreme-by-mean (interior)
// forecasts; round(fraction * k / 2) are removed/kept from each end. Ties
// in means are broken by input order.
std::vector<PiecewiseLinearCdf> trim_by_mean(std::span<const PiecewiseLinearCdf> cdfs,
                                             TrimKind kind, double fraction);

// Horizontal pool if mqs_h <= mqs_v, vertical pool otherwise.
PiecewiseLinearCdf hv_switch(std::span<const PiecewiseLinearCdf> cdfs,
                             double in_sample_mqs_h, double in_sample_mqs_v,
                             const Aggregator& agg);

struct BetaPoolParams {
  double a = 1.0;
  double b = 1.0;

  void validate() const;
};

// Beta-transformed linear pool: the vertical weighted pool's probabilities
// are mapped through the Beta(a, b) CDF at every knot.
PiecewiseLinearCdf beta_pool(std::span<const PiecewiseLinearCdf> cdfs,
                             std::span<const double> weights,
                             const BetaPoolParams& params);

struct RecalibrationParams {
  double gamma = 1.0;
  std::vector<double> bin_edges;  // strictly increasing from 0 to 1

  static RecalibrationParams with_hub_bins(double gamma);
  void validate() const;
};

// Bin masses (differences of p at the bin edges) are reweighted to
// m_j^gamma / sum m_j^gamma and re-accumulated; gamma = 1 is the identity.
PiecewiseLinearCdf recalibrate(const PiecewiseLinearCdf& cdf,
                               const RecalibrationParams& params);

// Weighted pool of exactly two forecasts with weights (w, 1 - w), performed
// vertically or horizontally.
PiecewiseLinearCdf secondary_combine(const PiecewiseLinearCdf& cdf_h,
                                     const PiecewiseLinearCdf& cdf_v, double w,
                                     Direction direction);

// Dispatch on a full combination spec. Trimmed aggregation selects the
// subset first and then pools it with the simple mean; angular mean and
// weighted combinations take the exact route, the median takes the grid.
PiecewiseLinearCdf combine(std::span<const PiecewiseLinearCdf> cdfs,
                           CombinationSpec spec);

}  // namespace angpool
