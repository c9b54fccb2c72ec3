#pragma once

#include <cstddef>
#include <functional>

namespace didint {

// Worker count: DIDINT_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t thread_count();

// Calls body(i) for i in [0, n) on up to `threads` workers. Indices are handed
// out dynamically; the first exception thrown is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t threads = 0);

}  // namespace didint
