// Counter-based deterministic random stream. The same seed yields the same
// byte-identical draw sequence on every platform, which no std engine +
// std distribution combination guarantees. Workers derive independent
// streams by seed-splitting rather than sharing one stream.
#pragma once

#include <cstdint>
#include <cmath>

#include "bombworks/errors.hpp"
#include "bombworks/matrix.hpp"

namespace bombworks {

// SplitMix64 finalizer; also used standalone for seed derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derive a child seed from (seed, index). Used for worker/trial splitting.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ mix64(index + 0x7f4a7c159e3779b9ull));
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), counter_(0) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return mix64(seed_ ^ mix64(counter_++)); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw ParameterError("uniform_index: n must be positive");
    return next_u64() % n;
  }

  // Standard normal via Box-Muller (two uniforms per draw; no cached spare,
  // so the counter advances identically no matter how draws interleave).
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double std) { return mean + std * normal(); }

  RngStream child(std::uint64_t index) const { return RngStream(split_seed(seed_, index)); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

// Matrix of iid Uniform[-rho, rho] entries. rho = 0 gives an exact zero
// matrix (no residual rounding noise).
inline Matrix uniform_noise(std::size_t rows, std::size_t cols, double rho, RngStream& rng) {
  if (rho < 0.0) throw ParameterError("uniform_noise: rho must be non-negative");
  Matrix out(rows, cols, 0.0);
  if (rho == 0.0) return out;
  for (double& x : out.data) x = rng.uniform(-rho, rho);
  return out;
}

}  // namespace bombworks
