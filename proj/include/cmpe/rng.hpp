#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace cmpe {

// xoshiro256++ with splitmix64 seeding. Used everywhere instead of <random>
// distributions so that streams are reproducible independent of the standard
// library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
  }

  // Derives an independent stream for a named purpose (enum tag) so that
  // adding a consumer does not shift the draws of existing ones.
  Rng stream(std::uint64_t tag) const {
    std::uint64_t x = state_[0] ^ (0x9e3779b97f4a7c15ULL * (tag + 1));
    return Rng(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via the polar (Marsaglia) method; pairs are cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::array<std::uint64_t, 4> save() const { return state_; }
  void restore(const std::array<std::uint64_t, 4>& s) {
    state_ = s;
    has_spare_ = false;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream tags for the pipeline. Fixed values are part of the reproducibility
// contract: a dataset generated with seed S is identical across builds.
namespace rng_tag {
inline constexpr std::uint64_t perturb = 1;
inline constexpr std::uint64_t evidence_subset = 2;
inline constexpr std::uint64_t gibbs_data = 3;
inline constexpr std::uint64_t gibbs_q = 4;
inline constexpr std::uint64_t mlp_init = 5;
inline constexpr std::uint64_t shuffle = 6;
inline constexpr std::uint64_t dual_init = 7;
}  // namespace rng_tag

}  // namespace cmpe
