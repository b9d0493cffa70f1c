#pragma once

#include <cstddef>
#include <functional>

namespace dpmlab {

// Worker count from DPMLAB_WORKERS, else the hardware concurrency (at least 1).
int default_workers();

// Runs body(i) for i in [0, n) on up to `workers` threads with dynamic
// scheduling. The first exception thrown by any task is rethrown after all
// threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

}  // namespace dpmlab
