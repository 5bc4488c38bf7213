#pragma once

#include <cstdint>
#include <initializer_list>

namespace apdp {

// splitmix64 finalizer. Used for seed expansion and stream derivation.
inline std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a master seed and a key path,
// e.g. derive_seed(master, {tournament, pair}). Reproducible across
// platforms, so parallel schedulers cannot affect results.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master ^ 0x6a09e667f3bcc909ull);
  for (std::uint64_t p : path) {
    h = mix64(h + 0x9e3779b97f4a7c15ull * (p + 1));
  }
  return h;
}

// xoshiro256++ with a splitmix64-seeded state. The standard library's
// distributions are not bit-portable across implementations, so sampling
// is done here by hand: every draw is reproducible from the seed alone,
// on any platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : state_) {
      sm += 0x9e3779b97f4a7c15ull;
      w = mix64(sm);
    }
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

  // Uniform in [0, 1): 53 random bits, exact on every IEEE-754 platform.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n). Unbiased via bitmask rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t mask = mask_for(n - 1);
    std::uint64_t v;
    do {
      v = next_u64() & mask;
    } while (v >= n);
    return v;
  }

  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(uniform_int(n)); }

  bool coin() { return (next_u64() >> 63) != 0; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  static std::uint64_t mask_for(std::uint64_t max_value) {
    std::uint64_t mask = ~std::uint64_t{0};
    int shift = 0;
    while ((max_value >> shift) > 0 && shift < 63) ++shift;
    if (shift < 64) mask = (std::uint64_t{1} << shift) - 1;
    if (mask < max_value) mask = ~std::uint64_t{0};
    return mask;
  }

  std::uint64_t state_[4];
};

}  // namespace apdp
