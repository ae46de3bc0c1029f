#pragma once

#include <cstddef>
#include <functional>

namespace acela {

/// Worker count: ACELA_SIM_THREADS if set to a positive integer, else the
/// machine's hardware concurrency.
std::size_t worker_count();

/// Runs fn(0..n-1) on up to worker_count() threads. The first exception (by
/// index) is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace acela
