#pragma once

#include <cstddef>
#include <functional>

namespace charl {

/// Worker threads used by parallel_for. Defaults to CHARL_THREADS when set, otherwise the
/// hardware concurrency.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Calls fn(i) for every i in [0, n). Callers write results into pre-sized slots indexed by
/// i, so the outcome does not depend on scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace charl
