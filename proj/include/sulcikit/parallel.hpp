#pragma once

#include <cstddef>
#include <functional>

namespace sulcikit {

// Runs fn(i) for i in [0, n) on up to `jobs` threads (0 = hardware
// concurrency). Rethrows the exception of the lowest failing index.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

unsigned resolve_jobs(unsigned requested);

}  // namespace sulcikit
