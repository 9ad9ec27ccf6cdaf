#pragma once

#include <cstddef>
#include <functional>

namespace deferlab {

// Runs fn(i) for every i in [0, n) on up to `jobs` threads (jobs <= 1 runs
// inline). Tasks are claimed in index order; the first exception thrown by
// any task is rethrown after all workers stop.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// DEFERLAB_JOBS when set to a positive integer, otherwise `fallback`.
int resolve_jobs(int fallback);

}  // namespace deferlab
