#pragma once

#include <cstddef>
#include <functional>

namespace arith {

/// Worker cap: ARITH_THREADS if set to a positive integer, else the hardware
/// concurrency (at least 1).
std::size_t worker_count();

/// Calls fn(i) for i in [0, n) on up to worker_count() threads. Each index runs
/// exactly once; the first exception thrown by any call is rethrown here.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace arith
