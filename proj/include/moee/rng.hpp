// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace moee {

/// Seeded PRNG stream used for every random draw in the toolkit.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Conversions to reals are done here rather than through
/// <random> distributions (whose algorithms are implementation-defined), so a
/// given seed yields the same numbers on every platform and standard library:
///
///   uniform()   = (next() >> 11) * 2^-53            in [0, 1)
///   symmetric() = 2 * uniform() - 1                  in [-1, 1)
///   below(n)    = floor(uniform() * n)               in [0, n)
///   normal()    = Box-Muller on two uniform() draws  (no caching)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double symmetric() { return 2.0 * uniform() - 1.0; }

  std::uint64_t below(std::uint64_t n) {
    auto v = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    return v < n ? v : n - 1;
  }

  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace moee
