#pragma once

#include <cstddef>
#include <functional>

namespace exactmrf {

// Worker count: EXACTMRF_THREADS if set to a positive integer, otherwise the
// machine's hardware concurrency (at least 1).
unsigned worker_threads();

// Runs body(i) for i in [0, count) across worker_threads() threads in
// contiguous chunks. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace exactmrf
