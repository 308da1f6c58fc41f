#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace charcoal {

// Deterministic random source used by every generator in the library.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard distributions are implementation-defined, so all
// variates are derived here from raw 64-bit draws; a given seed therefore
// yields the same stream with any conforming standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
  }

  // Uniform integer in [0, bound), bound > 0, by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t bound);

  // Standard normal by the Marsaglia polar method.
  double normal();

  // Student t with an integer number of degrees of freedom.
  double student_t(int dof);

  // Exp(1).
  double exponential() { return -std::log(uniform_open()); }

  // +1 or -1 with equal probability.
  double rademacher() { return (engine_() >> 63) != 0 ? 1.0 : -1.0; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finaliser applied to (master, stream); used to give every
// replicate, fold or interval its own independent, order-free seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace charcoal
