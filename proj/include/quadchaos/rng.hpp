#pragma once

// Counter-based random streams. A stream is a pure function of its
// (seed, instance, replicate) key and a running counter, so any draw can be
// reproduced without replaying the ones before it and parallel workers that
// own disjoint keys produce the same numbers as a serial run.

#include <cmath>
#include <cstdint>

namespace quadchaos {

namespace detail {

// splitmix64 finalizer, full avalanche on 64 bits.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t instance = 0,
                     std::uint64_t replicate = 0) noexcept {
    std::uint64_t k = detail::mix64(seed + detail::kGolden);
    k = detail::mix64(k ^ detail::mix64(instance + 0x7f4a7c159e3779b9ULL));
    k = detail::mix64(k ^ detail::mix64(replicate + 0x6a09e667f3bcc909ULL));
    key_ = k;
  }

  std::uint64_t next_u64() noexcept {
    return detail::mix64(key_ + (++counter_) * detail::kGolden);
  }

  // Uniform on the open interval (0,1); endpoints are unreachable, so the
  // value is always safe under log() and inverse CDFs.
  double next_uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_exponential() noexcept { return -std::log(next_uniform()); }

  double next_sign() noexcept { return (next_u64() >> 63) ? 1.0 : -1.0; }

  // Standard normal, Box-Muller. The spare value is cached, so a stream
  // consumes exactly one pair of uniforms per two normals.
  double next_gaussian() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = next_uniform();
    const double v = next_uniform();
    const double rad = std::sqrt(-2.0 * std::log(u));
    const double ang = 2.0 * 3.14159265358979323846 * v;
    spare_ = rad * std::sin(ang);
    have_spare_ = true;
    return rad * std::cos(ang);
  }

  // Uniform integer in [0, n). Multiplicative reduction; the bias is below
  // n / 2^64 which is irrelevant at the sample counts used here.
  std::uint64_t next_below(std::uint64_t n) noexcept {
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
  }

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace quadchaos
