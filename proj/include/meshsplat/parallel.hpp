#pragma once

#include <cstddef>
#include <functional>

namespace meshsplat {

// Worker count: MESHSPLAT_THREADS if set to a positive integer, otherwise the
// hardware concurrency.
unsigned worker_count();

// Splits [0, n) into contiguous chunks, one per worker, and calls
// fn(begin, end, worker) on each. Chunk boundaries depend only on n and the
// worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t, unsigned)>& fn);

}  // namespace meshsplat
