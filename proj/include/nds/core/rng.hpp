#pragma once

// Counter-based random streams.
//
// Every random draw in the library comes from a Philox4x64-10 block cipher
// keyed by (seed, stream id). A stream only walks its own counter, so two
// stages keyed by different stream ids never share draws and adding a stage
// cannot shift the values another stage sees.
//
// Stream-splitting rule:
//   key[0] = seed            (recipe seed, or a per-sample seed)
//   key[1] = stream id       (one fixed id per consumer, see StreamId)
//   counter = {block, 0, 0, 0}, block = 0, 1, 2, ...
//
// The distributions below (Lemire bounded integers, Marsaglia polar
// normals) are written out by hand instead of using
// <random>'s, whose algorithms are implementation-defined.

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace nds {

using Philox4x64Counter = std::array<std::uint64_t, 4>;
using Philox4x64Key = std::array<std::uint64_t, 2>;

namespace detail {

__extension__ using u128 = unsigned __int128;

inline void mulhilo64(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const u128 product = static_cast<u128>(a) * b;
  hi = static_cast<std::uint64_t>(product >> 64);
  lo = static_cast<std::uint64_t>(product);
}

}  // namespace detail

/// Philox4x64 with 10 rounds (Salmon et al. constants).
inline Philox4x64Counter philox4x64(Philox4x64Counter ctr, Philox4x64Key key) {
  constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    detail::mulhilo64(kMul0, ctr[0], hi0, lo0);
    detail::mulhilo64(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// splitmix64 finalizer; used to derive child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t salt) {
  return mix64(parent ^ mix64(salt));
}

/// Fixed stream ids. Values are part of the on-disk reproducibility
/// contract: changing one changes every dataset generated with it.
enum class StreamId : std::uint64_t {
  kRecipe = 1,
  kSplatNoise = 2,
  kReposition = 3,
  kGlobalOffsets = 4,
  kTripletRoles = 5,
  kTargetChoice = 6,
  kVerifySelection = 7,
  kTest = 99,
};

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamId stream)
      : RandomStream(seed, static_cast<std::uint64_t>(stream)) {}
  RandomStream(std::uint64_t seed, std::uint64_t stream) : key_{seed, stream} {}

  std::uint64_t next_u64() {
    if (pos_ == 4) {
      buffer_ = philox4x64({block_++, 0, 0, 0}, key_);
      pos_ = 0;
    }
    return buffer_[pos_++];
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform in the open interval (lo, hi).
  double uniform_open(double lo, double hi) {
    for (;;) {
      const double v = uniform(lo, hi);
      if (v > lo && v < hi) return v;
    }
  }

  /// Uniform integer in [lo, hi] (Lemire's nearly-divisionless method).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0) return static_cast<std::int64_t>(next_u64());
    std::uint64_t x = next_u64();
    detail::u128 m = static_cast<detail::u128>(x) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
      const std::uint64_t threshold = (0 - range) % range;
      while (low < threshold) {
        x = next_u64();
        m = static_cast<detail::u128>(x) * range;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return lo + static_cast<std::int64_t>(m >> 64);
  }

  /// Standard normal via the Marsaglia polar method; the second variate of
  /// each accepted pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double x, y, s;
    do {
      x = 2.0 * uniform() - 1.0;
      y = 2.0 * uniform() - 1.0;
      s = x * x + y * y;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = y * scale;
    has_spare_ = true;
    return x * scale;
  }

 private:
  Philox4x64Key key_;
  std::uint64_t block_ = 0;
  Philox4x64Counter buffer_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nds
