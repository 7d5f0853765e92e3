#pragma once

#include <cstddef>
#include <functional>

namespace satsplat {

// Worker count: SATSPLAT_THREADS if set to a positive integer, otherwise
// std::thread::hardware_concurrency() (at least 1).
int default_thread_count();

// Runs fn(i) for i in [0, count) on up to max_threads threads (<= 0 means
// default_thread_count()). Work items are claimed dynamically, so fn must not
// depend on execution order. The first exception thrown by any item is
// rethrown on the calling thread after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  int max_threads = 0);

}  // namespace satsplat
