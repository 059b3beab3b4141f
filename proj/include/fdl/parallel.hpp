#pragma once

#include <cstddef>
#include <functional>

namespace fdl {

// Worker count used by the convolution routines. Work is split over
// independent output slices only, so results do not depend on this value.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Runs fn(i) for i in [0, n). Blocks until all calls returned.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace fdl
