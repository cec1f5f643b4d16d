#pragma once

#include <cstdint>
#include <functional>

namespace so3sr {

// Number of worker threads: SO3SR_THREADS if set (clamped to >= 1), otherwise
// the hardware concurrency.
int thread_count();

// Runs fn(begin, end) over a static partition of [0, n).  Callers keep
// determinism by writing disjoint per-index outputs and deriving any
// randomness from the index, never from the partition.
void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace so3sr
