#pragma once

#include <array>
#include <cstdint>

namespace demix {

/// Seed for every random draw in the library. `stream` selects an
/// independent sub-stream so parallel trials never share draws.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

/// Returns a seed whose key is mixed with `tag`, for carving independent
/// families out of a single user-facing seed.
RngSeed derive_seed(RngSeed base, std::uint64_t tag);

/// Philox4x32-10 (Salmon et al., SC'11). Counter-based: the output block is
/// a pure function of (key, counter), so any draw can be addressed directly
/// and results do not depend on evaluation order or platform.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key) noexcept;
};

/// Addressable random source over one (seed, stream). Block `i` yields two
/// uniforms in (0, 1) with 53-bit resolution; `normal(i)` applies Box-Muller
/// to the same pair.
class CounterRng {
 public:
  explicit CounterRng(RngSeed seed) noexcept;

  std::array<double, 2> uniforms(std::uint64_t index) const noexcept;
  double uniform(std::uint64_t index) const noexcept { return uniforms(index)[0]; }
  double normal(std::uint64_t index) const noexcept;

 private:
  Philox4x32::Key key_;
  std::uint64_t stream_;
};

/// Sequential convenience wrapper: consumes consecutive blocks of a
/// CounterRng starting at block 0.
class RngStream {
 public:
  explicit RngStream(RngSeed seed) noexcept : rng_(seed) {}

  double uniform() noexcept { return rng_.uniform(next_++); }
  double normal() noexcept { return rng_.normal(next_++); }
  std::uint64_t position() const noexcept { return next_; }

 private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

}  // namespace demix
