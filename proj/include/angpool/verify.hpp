#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace angpool::verify {

struct SuiteResult {
  std::string name;
  bool passed = false;
  bool skipped = false;
  double worst_residual = 0.0;
  double tolerance = 0.0;
  long checks = 0;
  double seconds = 0.0;
  std::string detail;
};

struct Options {
  int trials = 500;
  std::uint64_t seed = 12345;
  int median_k = 0;  // 0 cycles {3, 5, 7}; an even value reports "skipped"
};

// Randomized numerical checks of the combination identities:
//   mean      exact angular mean equals the average of member means
//   variance  angular variance below vertical; nondecreasing in the angle
//             for equal-scale location-scale members
//   crps      pooled CRPS no worse than the average member CRPS; closed
//             form against trapezoid quadrature
//   median    vertical vs angular median agreement for odd k
//   pdf       grid-route density against the harmonic-arithmetic blend;
//             bimodality appears only near the vertical extreme
//   limits    grid route at 0/90 degrees against the exact pools; exact vs
//             grid agreement at interior angles
// "all" runs every suite. A suite may emit several named results.
std::vector<SuiteResult> run_suite(const std::string& name, const Options& options);

std::vector<std::string> suite_names();

std::string format_result(const SuiteResult& result);

}  // namespace angpool::verify
