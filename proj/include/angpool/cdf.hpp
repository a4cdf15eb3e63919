#pragma once

#include <span>
#include <vector>

namespace angpool {

// Geometric residual tolerance, in scaled units.
inline constexpr double kGeomTol = 1e-10;

// The 23 probability levels elicited by the COVID-19 Forecast Hub.
const std::vector<double>& hub_levels();

// How to read a CDF value at an x where the CDF jumps (a vertical segment).
enum class FlatRule { lower, upper, midpoint };

struct Knot {
  double x = 0.0;  // outcome units
  double p = 0.0;  // probability
};

// One forecaster's quantile forecast: levels strictly increasing in (0,1),
// quantiles nondecreasing (non-crossing).
struct QuantileForecast {
  std::vector<double> levels;
  std::vector<double> quantiles;

  void validate() const;
};

struct Moments {
  double mean = 0.0;
  double second_moment = 0.0;
  double variance = 0.0;
};

// Bounded continuous CDF given by an ordered knot list. p is strictly
// increasing from 0 to 1; x is nondecreasing, with equal consecutive x
// values encoding a jump.
class PiecewiseLinearCdf {
 public:
  explicit PiecewiseLinearCdf(std::vector<Knot> knots);

  const std::vector<Knot>& knots() const { return knots_; }
  double support_lo() const { return knots_.front().x; }
  double support_hi() const { return knots_.back().x; }

  // 0 below support, 1 above, linear interpolation inside; at a jump the
  // flat rule picks the lower/upper/midpoint of the p-range.
  double eval(double x, FlatRule rule = FlatRule::midpoint) const;

  // Quantile function; alpha in [0,1], linear interpolation in p.
  double inverse(double alpha) const;

  // Closed-form integration of the piecewise-linear quantile function.
  Moments moments() const;

  // Segment slope at an x strictly inside a non-jump segment; throws
  // "undefined-density" at knots, inside jumps, and outside the support.
  double density_at(double x) const;

 private:
  std::vector<Knot> knots_;
};

// Affine map between outcome units and the unit-length axis used for angles.
struct ScaledFrame {
  double lo = 0.0;
  double hi = 1.0;

  ScaledFrame(double lo, double hi);

  double width() const { return hi - lo; }
  double to_unit(double x) const { return (x - lo) / (hi - lo); }
  double from_unit(double u) const { return lo + u * (hi - lo); }

  // [min lower bound, max upper bound] over the CDFs being combined.
  static ScaledFrame around(std::span<const PiecewiseLinearCdf> cdfs);
};

// Line through (d, d) on the unit-box diagonal with slope -tan(theta), in
// scaled coordinates. theta = 0 is the horizontal line y = d; theta = 90 is
// the vertical line x = d.
struct AngledLine {
  double theta_deg = 0.0;
  double anchor = 0.5;

  AngledLine(double theta_deg, double anchor);
};

// Builds the CDF from a quantile forecast using the Hub bound rule: the
// lower bound sits one first-gap below the smallest quantile (clipped at
// zero for nonnegative data), the upper bound one last-gap above the
// largest. Duplicate quantiles become jumps.
PiecewiseLinearCdf cdf_from_quantiles(const QuantileForecast& qf);

// Unique crossing of the angled line with the CDF extended flat (0/1)
// outside its support. Returns the point in outcome units.
Knot intersect_line(const PiecewiseLinearCdf& cdf, const AngledLine& line,
                    const ScaledFrame& frame);

enum class LinkDirection { forward, inverse };

// The quantile transform behind angular averaging: forward shifts every
// knot x by p * width / tan(theta); inverse undoes it. theta = 90 is the
// identity. The inverse throws "non-monotone-result" if the input was not
// in the image of the forward map.
PiecewiseLinearCdf link_transform(const PiecewiseLinearCdf& cdf, double theta_deg,
                                  const ScaledFrame& frame, LinkDirection direction);

// Sup-norm of the difference, evaluated over the union of both knot sets
// (midpoint rule at jumps).
double sup_distance(const PiecewiseLinearCdf& a, const PiecewiseLinearCdf& b);

}  // namespace angpool
