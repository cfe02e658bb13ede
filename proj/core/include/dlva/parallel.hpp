#pragma once

#include <cstddef>
#include <functional>

namespace dlva {

// Number of worker threads used by parallel_for; defaults to the hardware
// concurrency, overridable via set_thread_count or the DLVA_THREADS
// environment variable.
size_t thread_count();
void set_thread_count(size_t n);

// Runs fn over contiguous chunks [begin, end) covering [0, n). Each index is
// processed by exactly one worker writing disjoint outputs, so results do not
// depend on the thread count. Runs inline when n < min_parallel.
void parallel_for(size_t n, size_t min_parallel,
                  const std::function<void(size_t begin, size_t end)>& fn);

}  // namespace dlva
