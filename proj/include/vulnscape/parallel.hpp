#pragma once

#include <cstddef>
#include <functional>

namespace vulnscape {

/// Process-wide worker count used by the parallel loops (default: hardware
/// concurrency).  Results never depend on it; every loop writes into
/// index-addressed slots and reductions happen serially afterwards.
void set_worker_count(std::size_t workers);
std::size_t worker_count();

/// Calls `body(i)` for every i in [0, n).  The first exception thrown by any
/// task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace vulnscape
