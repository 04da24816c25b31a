#include <doctest.h>

#include <cmath>
#include <set>

#include "demix/rng.hpp"

using namespace demix;

TEST_CASE("philox4x32-10 known answers") {
  // Published Random123 test vectors.
  CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) ==
        Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("uniforms stay inside the open unit interval") {
  const CounterRng rng({3, 9});
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const auto [a, b] = rng.uniforms(i);
    REQUIRE(a > 0.0);
    REQUIRE(a < 1.0);
    REQUIRE(b > 0.0);
    REQUIRE(b < 1.0);
  }
}

TEST_CASE("draws are addressable and reproducible") {
  const CounterRng a({42, 1}), b({42, 1});
  CHECK(a.normal(12345) == b.normal(12345));
  RngStream s({42, 1});
  for (int i = 0; i < 5; ++i) s.normal();
  CHECK(s.position() == 5);
  CHECK(s.normal() == a.normal(5));
}

TEST_CASE("streams and derived seeds separate") {
  const CounterRng a({42, 0}), b({42, 1}), c({43, 0});
  CHECK(a.uniform(0) != b.uniform(0));
  CHECK(a.uniform(0) != c.uniform(0));
  std::set<std::uint64_t> keys;
  for (std::uint64_t tag = 0; tag < 100; ++tag) keys.insert(derive_seed({7, 0}, tag).seed);
  CHECK(keys.size() == 100);
  CHECK(derive_seed({7, 5}, 1).stream == 5);
}

TEST_CASE("normal draws have unit moments") {
  RngStream s({11, 0});
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = s.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 5.0 / std::sqrt(n));
  CHECK(std::abs(sq / n - mean * mean - 1.0) < 0.015);
}
