#include "deferlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace deferlab {

double CounterStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterStream::below(std::uint64_t n) {
  __extension__ using u128 = unsigned __int128;
  const u128 prod = static_cast<u128>(next_u64()) * n;
  return static_cast<std::uint64_t>(prod >> 64);
}

double CounterStream::normal() {
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace deferlab
