#include "angpool/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "angpool/combine.hpp"
#include "angpool/error.hpp"
#include "angpool/ingest.hpp"
#include "angpool/math.hpp"
#include "angpool/scoring.hpp"
#include "angpool/util.hpp"

namespace angpool::verify {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Warped Gaussians discretized at the 23 levels. Parameters are chosen so
// every support contains a common interval, which keeps the combinations
// free of zero-density gaps. Jumps (duplicate quantiles) are only enabled
// for the exact-route suites; the grid procedure assumes strictly
// monotone members, as does the theory.
PiecewiseLinearCdf random_member(Rng& rng, bool allow_jumps) {
  const double mu = rng.uniform(-0.5, 0.5);
  const double sd = rng.uniform(0.3, 0.8);
  const double warp = rng.uniform(0.0, 0.3);
  QuantileForecast qf;
  qf.levels = hub_levels();
  qf.quantiles.reserve(qf.levels.size());
  for (const double alpha : qf.levels) {
    const double q = mu + sd * normal_quantile(alpha);
    qf.quantiles.push_back(q + warp * q * q * q);
  }
  if (allow_jumps && rng.uniform() < 0.3) {
    const auto i = static_cast<std::size_t>(rng.uniform_int(3, 18));
    qf.quantiles[i + 1] = qf.quantiles[i];
  }
  return cdf_from_quantiles(qf);
}

std::vector<PiecewiseLinearCdf> random_set(Rng& rng, int k, bool allow_jumps) {
  std::vector<PiecewiseLinearCdf> cdfs;
  cdfs.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) cdfs.push_back(random_member(rng, allow_jumps));
  return cdfs;
}

// Equal-scale Gaussian translates: the setting of the variance
// monotonicity theorem.
std::vector<PiecewiseLinearCdf> random_location_scale_set(Rng& rng, int k) {
  const double sd = rng.uniform(0.2, 0.6);
  std::vector<PiecewiseLinearCdf> cdfs;
  cdfs.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    cdfs.push_back(cdf_from_quantiles(
        gaussian_quantile_forecast(rng.uniform(-0.5, 0.5), sd)));
  }
  return cdfs;
}

std::vector<PiecewiseLinearCdf> two_gaussian_fixture() {
  return {cdf_from_quantiles(gaussian_quantile_forecast(-0.15, 0.1)),
          cdf_from_quantiles(gaussian_quantile_forecast(0.15, 0.1))};
}

SuiteResult make_result(std::string name, double worst, double tol, long checks,
                        Clock::time_point start, std::string detail = {}) {
  SuiteResult r;
  r.name = std::move(name);
  r.worst_residual = worst;
  r.tolerance = tol;
  r.passed = worst <= tol;
  r.checks = checks;
  r.seconds = elapsed_seconds(start);
  r.detail = std::move(detail);
  return r;
}

SuiteResult mean_suite(const Options& options) {
  const auto start = Clock::now();
  Rng rng(options.seed);
  double worst = 0.0;
  long checks = 0;
  for (int trial = 0; trial < options.trials; ++trial) {
    const int k = 2 + trial % 4;
    const auto cdfs = random_set(rng, k, true);
    double mean_of_means = 0.0;
    for (const auto& cdf : cdfs) mean_of_means += cdf.moments().mean;
    mean_of_means /= static_cast<double>(k);
    for (int theta = 1; theta <= 89; ++theta) {
      const auto pooled = angular_combine_exact(cdfs, theta);
      worst = std::max(worst, std::fabs(pooled.moments().mean - mean_of_means));
      ++checks;
    }
  }
  return make_result("mean", worst, 1e-9, checks, start,
                     "exact angular mean vs average of member means");
}

std::vector<SuiteResult> variance_suite(const Options& options) {
  const auto start_sharp = Clock::now();
  Rng rng(options.seed);
  double worst_sharp = 0.0;
  long checks_sharp = 0;
  for (int trial = 0; trial < options.trials; ++trial) {
    const int k = 2 + trial % 4;
    const auto cdfs = random_set(rng, k, true);
    const double var_vertical =
        vertical_combine(cdfs, Aggregator::mean()).moments().variance;
    for (int theta = 1; theta <= 89; ++theta) {
      const double var_angular =
          angular_combine_exact(cdfs, theta).moments().variance;
      worst_sharp = std::max(worst_sharp, var_angular - var_vertical);
      ++checks_sharp;
    }
  }
  SuiteResult sharp =
      make_result("variance-sharpness", worst_sharp, 1e-9, checks_sharp,
                  start_sharp, "Var(angular) - Var(vertical), random sets");

  const auto start_mono = Clock::now();
  Rng rng_mono(options.seed + 1);
  double worst_mono = 0.0;
  long checks_mono = 0;
  for (int trial = 0; trial < options.trials; ++trial) {
    const int k = 2 + trial % 4;
    const auto cdfs = random_location_scale_set(rng_mono, k);
    double previous = 0.0;
    for (int theta = 0; theta <= 90; theta += 5) {
      const PiecewiseLinearCdf pooled =
          theta == 0 ? horizontal_combine(cdfs, Aggregator::mean())
                     : angular_combine_exact(cdfs, theta);
      const double variance = pooled.moments().variance;
      if (theta > 0) {
        worst_mono = std::max(worst_mono, previous - variance);
        ++checks_mono;
      }
      previous = variance;
    }
  }
  SuiteResult mono = make_result(
      "variance-monotonic", worst_mono, 1e-6, checks_mono, start_mono,
      "variance decrease along 0..90 degrees, equal-scale Gaussian sets");
  return {sharp, mono};
}

// Trapezoid quadrature of the squared-difference form of the CRPS on a
// uniform grid refined with the knots and the observation. One-sided CDF
// limits keep jump segments exact; only the piecewise-quadratic interior
// carries quadrature error.
double crps_by_quadrature(const PiecewiseLinearCdf& cdf, double z, int points) {
  const double lo = std::min(cdf.support_lo(), z);
  const double hi = std::max(cdf.support_hi(), z);
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points) + cdf.knots().size() + 1);
  for (int i = 0; i < points; ++i) {
    grid.push_back(lo + (hi - lo) * static_cast<double>(i) /
                            static_cast<double>(points - 1));
  }
  for (const auto& k : cdf.knots()) grid.push_back(k.x);
  grid.push_back(z);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double total = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double a = grid[i - 1];
    const double b = grid[i];
    if (!(b > a)) continue;
    const double indicator = 0.5 * (a + b) > z ? 1.0 : 0.0;
    const double fa = cdf.eval(a, FlatRule::upper) - indicator;
    const double fb = cdf.eval(b, FlatRule::lower) - indicator;
    total += 0.5 * (fa * fa + fb * fb) * (b - a);
  }
  return total;
}

std::vector<SuiteResult> crps_suite(const Options& options) {
  const auto start_bound = Clock::now();
  Rng rng(options.seed);
  double worst_bound = 0.0;
  long checks_bound = 0;
  const double thetas[] = {15.0, 45.0, 75.0};
  for (int trial = 0; trial < options.trials; ++trial) {
    const int k = 2 + trial % 4;
    const auto cdfs = random_set(rng, k, true);
    const ScaledFrame frame = ScaledFrame::around(cdfs);
    const double z =
        rng.uniform(frame.lo - 0.2 * frame.width(), frame.hi + 0.2 * frame.width());
    double average_crps = 0.0;
    for (const auto& cdf : cdfs) average_crps += crps(cdf, z);
    average_crps /= static_cast<double>(k);
    PiecewiseLinearCdf pooled = [&] {
      switch (trial % 5) {
        case 0: return vertical_combine(cdfs, Aggregator::mean());
        case 1: return horizontal_combine(cdfs, Aggregator::mean());
        default: return angular_combine_exact(cdfs, thetas[trial % 3]);
      }
    }();
    worst_bound = std::max(worst_bound, crps(pooled, z) - average_crps);
    ++checks_bound;
  }
  SuiteResult bound = make_result(
      "crps-bound", worst_bound, 1e-9, checks_bound, start_bound,
      "CRPS(pool) - average member CRPS across V/H/A(15,45,75)");

  const auto start_quad = Clock::now();
  Rng rng_quad(options.seed + 2);
  double worst_quad = 0.0;
  long checks_quad = 0;
  const int cases = std::min(options.trials, 100);
  for (int trial = 0; trial < cases; ++trial) {
    const auto cdf = random_member(rng_quad, true);
    const double width = cdf.support_hi() - cdf.support_lo();
    const double z = rng_quad.uniform(cdf.support_lo() - 0.1 * width,
                                      cdf.support_hi() + 0.1 * width);
    const double closed = crps(cdf, z);
    const double quad = crps_by_quadrature(cdf, z, 100000);
    worst_quad = std::max(worst_quad, std::fabs(closed - quad) / closed);
    ++checks_quad;
  }
  SuiteResult quadrature =
      make_result("crps-quadrature", worst_quad, 1e-6, checks_quad, start_quad,
                  "closed form vs 1e5-point trapezoid, relative");
  return {bound, quadrature};
}

SuiteResult median_suite(const Options& options) {
  const auto start = Clock::now();
  if (options.median_k != 0 && options.median_k % 2 == 0) {
    SuiteResult r;
    r.name = "median";
    r.skipped = true;
    r.passed = true;
    r.detail = "skipped: k must be odd";
    r.seconds = elapsed_seconds(start);
    return r;
  }
  Rng rng(options.seed);
  constexpr int m = 1001;
  double worst = 0.0;
  long checks = 0;
  const int odd_k[] = {3, 5, 7};
  for (int trial = 0; trial < options.trials; ++trial) {
    const int k = options.median_k != 0 ? options.median_k : odd_k[trial % 3];
    const auto cdfs = random_set(rng, k, false);
    const auto vertical = median_combine(cdfs, Direction::vertical);
    const auto angular = median_combine(cdfs, Direction::angular, 45.0, m);
    worst = std::max(worst, sup_distance(vertical, angular));
    ++checks;
  }
  return make_result("median", worst, 2.0 / m, checks, start,
                     "sup-norm, vertical vs angular (45 deg) median, odd k");
}

std::vector<SuiteResult> pdf_suite(const Options& options) {
  (void)options;
  const auto cdfs = two_gaussian_fixture();
  const ScaledFrame frame = ScaledFrame::around(cdfs);
  constexpr int m = 10001;

  const auto start_formula = Clock::now();
  double worst_formula = 0.0;
  long checks_formula = 0;
  for (const double theta : {30.0, 65.0}) {
    const double t = std::tan(theta * std::numbers::pi / 180.0);
    std::vector<double> xbar(m), pbar(m);
    std::vector<std::vector<double>> member_x(cdfs.size(), std::vector<double>(m));
    for (int j = 0; j < m; ++j) {
      const double d = static_cast<double>(j) / static_cast<double>(m - 1);
      const AngledLine line(theta, d);
      double sx = 0.0, sp = 0.0;
      for (std::size_t i = 0; i < cdfs.size(); ++i) {
        const Knot pt = intersect_line(cdfs[i], line, frame);
        member_x[i][static_cast<std::size_t>(j)] = pt.x;
        sx += pt.x;
        sp += pt.p;
      }
      xbar[static_cast<std::size_t>(j)] = sx / static_cast<double>(cdfs.size());
      pbar[static_cast<std::size_t>(j)] = sp / static_cast<double>(cdfs.size());
    }
    for (int j = 1; j + 1 < m; ++j) {
      const auto js = static_cast<std::size_t>(j);
      if (pbar[js] < 0.02 || pbar[js] > 0.98) continue;
      // Use only anchors whose member intersections stay inside a single
      // linear segment across the finite-difference window.
      bool smooth = true;
      std::vector<double> densities(cdfs.size());
      for (std::size_t i = 0; i < cdfs.size() && smooth; ++i) {
        try {
          const double f0 = cdfs[i].density_at(member_x[i][js - 1]);
          const double f1 = cdfs[i].density_at(member_x[i][js]);
          const double f2 = cdfs[i].density_at(member_x[i][js + 1]);
          if (f0 != f1 || f1 != f2) {
            smooth = false;
          } else {
            densities[i] = f1 * frame.width();  // scaled density
          }
        } catch (const Error&) {
          smooth = false;
        }
      }
      if (!smooth) continue;
      double num = 0.0, den = 0.0;
      for (const double f : densities) {
        num += f / (f + t);
        den += 1.0 / (f + t);
      }
      const double blend = num / den;
      const double fd = frame.width() * (pbar[js + 1] - pbar[js - 1]) /
                        (xbar[js + 1] - xbar[js - 1]);
      worst_formula = std::max(worst_formula, std::fabs(fd - blend) / blend);
      ++checks_formula;
    }
  }
  SuiteResult formula = make_result(
      "pdf-formula", worst_formula, 1e-2, checks_formula, start_formula,
      "grid-route finite differences vs density blend, theta 30 and 65 deg");
  if (checks_formula < 1000) {
    formula.passed = false;
    formula.detail += " (too few smooth interior points)";
  }

  const auto start_shape = Clock::now();
  const auto density_of = [&](const PiecewiseLinearCdf& cdf, double x) {
    const double h = 0.01;
    return (cdf.eval(x + h) - cdf.eval(x - h)) / (2.0 * h);
  };
  const auto pooled_88 = angular_combine_grid(cdfs, 88.0, Aggregator::mean(), m);
  const auto pooled_45 = angular_combine_grid(cdfs, 45.0, Aggregator::mean(), m);
  bool shape_ok = true;
  double margin = 1.0;
  for (const double offset : {0.04, 0.08, 0.12}) {
    const double center_88 = density_of(pooled_88, 0.0);
    const double side_88 =
        std::min(density_of(pooled_88, -offset), density_of(pooled_88, offset));
    const double center_45 = density_of(pooled_45, 0.0);
    const double side_45 =
        std::max(density_of(pooled_45, -offset), density_of(pooled_45, offset));
    if (!(center_88 < side_88)) shape_ok = false;
    if (!(center_45 > side_45)) shape_ok = false;
    margin = std::min({margin, side_88 - center_88, center_45 - side_45});
  }
  SuiteResult shape;
  shape.name = "pdf-bimodality";
  shape.passed = shape_ok;
  shape.worst_residual = -margin;  // negative while the ordering holds
  shape.tolerance = 0.0;
  shape.checks = 6;
  shape.seconds = elapsed_seconds(start_shape);
  shape.detail = "density dip at the mean for 88 deg, none for 45 deg";
  return {formula, shape};
}

std::vector<SuiteResult> limits_suite(const Options& options) {
  constexpr int m = 1001;
  const auto start_extremes = Clock::now();
  Rng rng(options.seed);
  double worst_extremes = 0.0;
  long checks_extremes = 0;
  std::vector<std::vector<PiecewiseLinearCdf>> sets;
  sets.reserve(static_cast<std::size_t>(options.trials));
  for (int trial = 0; trial < options.trials; ++trial) {
    sets.push_back(random_set(rng, 2 + trial % 4, false));
  }
  for (const auto& cdfs : sets) {
    const auto grid_h = angular_combine_grid(cdfs, 0.0, Aggregator::mean(), m);
    const auto grid_v = angular_combine_grid(cdfs, 90.0, Aggregator::mean(), m);
    worst_extremes = std::max(
        worst_extremes,
        sup_distance(grid_h, horizontal_combine(cdfs, Aggregator::mean())));
    worst_extremes = std::max(
        worst_extremes,
        sup_distance(grid_v, vertical_combine(cdfs, Aggregator::mean())));
    checks_extremes += 2;
  }
  SuiteResult extremes = make_result(
      "limits-extremes", worst_extremes, 2.0 / m, checks_extremes, start_extremes,
      "grid route at 0/90 deg vs horizontal/vertical pools");

  const auto start_agree = Clock::now();
  double worst_agree = 0.0;
  long checks_agree = 0;
  for (const auto& cdfs : sets) {
    for (const double theta : {15.0, 45.0, 75.0}) {
      const auto grid = angular_combine_grid(cdfs, theta, Aggregator::mean(), m);
      const auto exact = angular_combine_exact(cdfs, theta);
      worst_agree = std::max(worst_agree, sup_distance(grid, exact));
      ++checks_agree;
    }
  }
  SuiteResult agree =
      make_result("limits-exact-vs-grid", worst_agree, 2.0 / m, checks_agree,
                  start_agree, "grid vs link-route pools at 15/45/75 deg");
  return {extremes, agree};
}

}  // namespace

std::vector<std::string> suite_names() {
  return {"mean", "variance", "crps", "median", "pdf", "limits"};
}

std::vector<SuiteResult> run_suite(const std::string& name, const Options& options) {
  if (name == "all") {
    std::vector<SuiteResult> all;
    for (const auto& suite : suite_names()) {
      const auto results = run_suite(suite, options);
      all.insert(all.end(), results.begin(), results.end());
    }
    return all;
  }
  if (name == "mean") return {mean_suite(options)};
  if (name == "variance") return variance_suite(options);
  if (name == "crps") return crps_suite(options);
  if (name == "median") return {median_suite(options)};
  if (name == "pdf") return pdf_suite(options);
  if (name == "limits") return limits_suite(options);
  fail("invalid-input", "unknown verify suite: " + name);
}

std::string format_result(const SuiteResult& result) {
  std::ostringstream out;
  if (result.skipped) {
    out << result.name << ": SKIP (" << result.detail << ")";
    return out.str();
  }
  out << result.name << ": " << (result.passed ? "PASS" : "FAIL")
      << " worst residual " << fmt_double(result.worst_residual) << " tol "
      << fmt_double(result.tolerance) << " checks " << result.checks;
  if (!result.detail.empty()) out << " - " << result.detail;
  return out.str();
}

}  // namespace angpool::verify
