#pragma once

#include <cstddef>
#include <functional>

namespace paraopt {

/// Worker cap: hardware concurrency, lowered by the PARAOPT_THREADS env var.
int worker_count();

/// Runs fn(i) for i in [0, n). Iterations are split into contiguous chunks,
/// one per worker; fn must only write state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace paraopt
