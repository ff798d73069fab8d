// Deterministic random numbers. All stochastic code in the library draws from
// this wrapper so runs with equal seeds are bit-identical across platforms:
// the engine is std::mt19937_64 (standard-defined output sequence) and every
// transform below is hand-rolled rather than delegated to std::*_distribution,
// whose algorithms are implementation-defined.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "diasep/tensor.hpp"

namespace diasep {

namespace detail {

// splitmix64 finalizer; used to derive well-separated child seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Independent child stream; distinct `stream` values give distinct seeds.
  Rng split(std::uint64_t stream) const {
    return Rng(detail::mix64(seed_ ^ detail::mix64(stream + 0x51ED2701ull)));
  }

  std::uint64_t bits() { return engine_(); }

  // Uniform on [0,1): 53 random bits scaled, never exactly 1.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::size_t index(std::size_t n) {
    check(n > 0, "Rng::index: empty range");
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  // Standard normal via Box-Muller; caches the second variate.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  cdouble cnormal() { return cdouble(normal(), normal()) / std::sqrt(2.0); }

  // Marsaglia-Tsang; valid for shape > 0.
  double gamma(double shape) {
    check(shape > 0.0, "Rng::gamma: shape must be positive");
    if (shape < 1.0) {
      const double u = std::max(uniform(), 1e-300);
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace diasep
