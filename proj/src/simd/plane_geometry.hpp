#pragma once

#include <cstddef>

namespace fdl::simd::detail {

// Source offset for the tap at index `a` of a filter centred at `centre`, on a
// circular axis of length n: output index i reads input (i + shift) mod n.
inline std::size_t tap_shift(std::size_t a, std::size_t centre, std::size_t n) {
  // shift = centre - a (mod n)
  const std::size_t back = a % n;
  const std::size_t fwd = centre % n;
  return (fwd + n - back) % n;
}

}  // namespace fdl::simd::detail
