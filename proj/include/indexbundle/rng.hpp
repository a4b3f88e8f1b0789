#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace indexbundle {

/// Deterministic random source. Distributions are hand-rolled on top of
/// mt19937_64 so that a given seed produces the same stream on every standard
/// library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform in [0,1) with 53 bits of mantissa.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(engine_() % span);
  }

  /// Box-Muller; consumes two uniforms per pair, caches the second.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Derive an independent child stream; used to give each trial of a
  /// randomized suite its own reproducible source.
  Rng fork(std::uint64_t salt) {
    return Rng(engine_() ^ (salt * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull));
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

namespace detail {

template <class Scalar>
inline Scalar random_scalar(Rng& rng) {
  if constexpr (std::is_same_v<Scalar, std::complex<double>>) {
    return {rng.gaussian(), rng.gaussian()};
  } else {
    return rng.gaussian();
  }
}

}  // namespace detail

}  // namespace indexbundle
