#pragma once

#include <cstdint>
#include <random>

namespace angpool {

// Inverse standard normal CDF (Wichura's AS 241, double precision).
double normal_quantile(double p);

// Regularized incomplete beta function I_x(a, b), the CDF of Beta(a, b).
double incomplete_beta(double x, double a, double b);

// Deterministic random source. std::mt19937_64 produces a bit-stable
// stream everywhere; the transforms below avoid the implementation-defined
// std::*_distribution adapters so results are identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive on both ends.
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(gen_() % span);
  }

  double normal() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return normal_quantile(u);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace angpool
