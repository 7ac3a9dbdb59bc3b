#include "rsmp/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rsmp {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t product =
      static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b);
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
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

double uniform_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^
                             (static_cast<std::uint64_t>(lo) >> 11);
  // bits in [0, 2^53); shift by one half so that 0 and 1 are excluded.
  // The top value rounds to 1.0.
  return std::min((static_cast<double>(bits & ((1ull << 53) - 1)) + 0.5) *
                      0x1.0p-53,
                  0x1.fffffffffffffp-1);
}

NormalStream::NormalStream(std::uint64_t seed, std::uint32_t domain)
    : key_{static_cast<std::uint32_t>(seed),
           static_cast<std::uint32_t>(seed >> 32)},
      domain_(domain) {}

std::array<double, 2> NormalStream::uniforms(std::uint64_t a,
                                             std::uint32_t b) const {
  const auto out = Philox4x32::generate(
      {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), b,
       domain_},
      key_);
  return {uniform_open(out[0], out[1]), uniform_open(out[2], out[3])};
}

std::array<double, 2> NormalStream::pair(std::uint64_t a,
                                         std::uint32_t b) const {
  const auto [u1, u2] = uniforms(a, b);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace rsmp
