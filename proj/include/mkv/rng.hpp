#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (seed, purpose, a, b, position), so particle
// p at step i always sees the same numbers no matter which worker thread runs
// it or in which order. The block cipher is Philox4x32-10.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace mkv::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Counter philox4x32_10(Counter ctr, Key key) noexcept {
  constexpr std::uint64_t kMul0 = 0xD2511F53u;
  constexpr std::uint64_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = kMul0 * ctr[0];
    const std::uint64_t p1 = kMul1 * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

// Stream purposes. Distinct purposes never share counters under one seed.
enum class Purpose : std::uint32_t {
  brownian = 1,
  initial = 2,
  resample = 3,
  optimizer = 4,
  regularity = 5,
  derive = 6,
  test = 7,
};

inline double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Standard normal quantile.
inline double normal_quantile(double u) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

// Sequential reader over one counter-based stream.
class Stream {
 public:
  Stream(std::uint64_t seed, Purpose purpose, std::uint32_t a, std::uint32_t b = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        a_(a),
        b_(b),
        purpose_(static_cast<std::uint32_t>(purpose)) {}

  std::uint64_t next_u64() noexcept {
    if (cursor_ == 2) refill();
    return cache_[cursor_++];
  }

  // Uniform on [0, 1).
  double uniform() noexcept { return to_unit(next_u64()); }

  // Uniform on (0, 1).
  double uniform_open() noexcept {
    double u = 0.0;
    while (u == 0.0) u = uniform();
    return u;
  }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // Box-Muller on (0,1] x [0,1).
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform integer in [0, n), n > 0. Lemire-style rejection keeps it unbiased.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

 private:
  void refill() noexcept {
    const Counter out = philox4x32_10({a_, b_, block_++, purpose_}, key_);
    cache_[0] = (std::uint64_t{out[0]} << 32) | out[1];
    cache_[1] = (std::uint64_t{out[2]} << 32) | out[3];
    cursor_ = 0;
  }

  Key key_;
  std::uint32_t a_;
  std::uint32_t b_;
  std::uint32_t purpose_;
  std::uint32_t block_ = 0;
  std::array<std::uint64_t, 2> cache_{};
  int cursor_ = 2;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Child seed for a named sub-experiment; a pure function of its arguments.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t tag, std::uint32_t index = 0) noexcept {
  Stream s(seed, Purpose::derive, tag, index);
  return s.next_u64();
}

}  // namespace mkv::rng
