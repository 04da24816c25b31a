#include "demix/rng.hpp"

#include <cmath>
#include <numbers>

namespace demix {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// 53 random bits mapped to the open interval (0, 1).
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

RngSeed derive_seed(RngSeed base, std::uint64_t tag) {
  return {splitmix64(base.seed ^ splitmix64(tag)), base.stream};
}

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

CounterRng::CounterRng(RngSeed seed) noexcept
    : key_{static_cast<std::uint32_t>(seed.seed), static_cast<std::uint32_t>(seed.seed >> 32)},
      stream_(seed.stream) {}

std::array<double, 2> CounterRng::uniforms(std::uint64_t index) const noexcept {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(index),
                                static_cast<std::uint32_t>(index >> 32),
                                static_cast<std::uint32_t>(stream_),
                                static_cast<std::uint32_t>(stream_ >> 32)};
  const auto out = Philox4x32::block(ctr, key_);
  return {to_unit(out[0], out[1]), to_unit(out[2], out[3])};
}

double CounterRng::normal(std::uint64_t index) const noexcept {
  const auto [u1, u2] = uniforms(index);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace demix
