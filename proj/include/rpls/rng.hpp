#pragma once

// Counter-based RNG (Philox4x32-10) so simulation replicates get independent,
// platform-stable substreams: stream id goes into the counter block, never the key.
// Normals use explicit Box-Muller; std::normal_distribution is not pinned by the
// standard and would break seed-reproducibility tests across toolchains.

#include <array>
#include <cmath>
#include <cstdint>

namespace rpls {

namespace detail {

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> c,
                                                  std::array<std::uint32_t, 2> k) {
  for (int r = 0; r < 10; ++r) {
    const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * c[0];
    const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * c[2];
    c = {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1),
         std::uint32_t(p0 >> 32) ^ c[3] ^ k[1], std::uint32_t(p0)};
    k[0] += 0x9E3779B9u;
    k[1] += 0xBB67AE85u;
  }
  return c;
}

}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
        stream_(stream) {}

  Rng substream(std::uint64_t stream) const { return Rng(key_, stream); }

  std::uint32_t next_u32() {
    if (have_ == 0) refill();
    return block_[--have_];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // [0,1) with 53 random bits
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    if (u1 == 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586;
    spare_ = r * std::sin(two_pi * u2);
    has_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  // uniform over {0, ..., n-1}, rejection-free enough for test sizes
  int below(int n) { return int(next_u64() % std::uint64_t(n)); }

  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = last - first;
    for (auto i = n - 1; i > 0; --i) std::swap(first[i], first[below(int(i) + 1)]);
  }

 private:
  Rng(std::array<std::uint32_t, 2> key, std::uint64_t stream)
      : key_(key), stream_(stream) {}

  void refill() {
    block_ = detail::philox4x32_10(
        {std::uint32_t(counter_), std::uint32_t(counter_ >> 32),
         std::uint32_t(stream_), std::uint32_t(stream_ >> 32)},
        key_);
    ++counter_;
    have_ = 4;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int have_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rpls
