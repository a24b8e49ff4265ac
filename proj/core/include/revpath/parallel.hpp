#pragma once

#include <cstddef>
#include <functional>

namespace revpath {

/// Worker count: hardware concurrency, capped by REVPATH_THREADS when set.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) across worker_count() threads. Iterations
/// must be independent; exceptions from workers are rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace revpath
