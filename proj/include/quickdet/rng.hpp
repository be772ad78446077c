#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace quickdet {

/// Seeded draws built directly on the mt19937_64 bit stream, so a given
/// seed reproduces the same sequence regardless of the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n);

  /// Standard normal via Box-Muller with a cached spare.
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  /// Exact Poisson draw (Knuth's product method).
  int poisson(double rate);

  /// Dirichlet sample from per-component concentrations.
  std::vector<double> dirichlet(std::span<const double> alpha);

 private:
  double gamma(double shape);  // Marsaglia-Tsang

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace quickdet
