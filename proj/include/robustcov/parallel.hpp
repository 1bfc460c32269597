#pragma once

#include <cstddef>
#include <functional>

namespace robustcov {

/// Worker count: ROBUSTCOV_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
std::size_t thread_count();

/// Calls fn(i) for every i in [0, n) on up to `threads` workers. Callers
/// write results into slot i, so output order never depends on scheduling.
/// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t threads = thread_count());

}  // namespace robustcov
