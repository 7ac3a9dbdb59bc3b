#pragma once

#include <array>
#include <cstdint>

namespace rsmp {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A draw is a
/// pure function of (key, counter), so any path/step can be generated
/// independently of execution order.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key);
};

/// Maps two 32-bit words to a double uniformly distributed in the open
/// interval (0, 1) with 53 bits of resolution.
double uniform_open(std::uint32_t hi, std::uint32_t lo);

/// Deterministic standard normals keyed on (seed, stream, index). Each call
/// produces one Box-Muller pair from one Philox block.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed, std::uint32_t domain = 0);

  /// Two independent N(0,1) draws for the given counter words.
  std::array<double, 2> pair(std::uint64_t a, std::uint32_t b) const;

  /// Two independent U(0,1) draws for the given counter words.
  std::array<double, 2> uniforms(std::uint64_t a, std::uint32_t b) const;

 private:
  Philox4x32::Key key_;
  std::uint32_t domain_;
};

}  // namespace rsmp
