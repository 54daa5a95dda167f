#pragma once

#include <cstddef>
#include <functional>

namespace stf {

// Worker count for data-parallel loops. Defaults to 1; the STF_THREADS
// environment variable overrides it (clamped to [1, 256]).
std::size_t thread_count();

// Runs fn(begin, end) over a partition of [0, n). With one worker this is
// a plain call; with more, ranges are disjoint so writes never race and
// results are identical to the serial order.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace stf
