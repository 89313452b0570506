#pragma once

#include <cstddef>
#include <functional>

namespace tonnsim {

// Global worker count used by parallel_for. Defaults to 1; the CLI sets it
// from --threads. Thread count never changes results: parallel loops only
// partition disjoint writes, and every reduction happens serially in index
// order on the caller's thread.
void set_thread_count(int n);
int thread_count();

// Runs fn(begin, end) over a partition of [0, n) into contiguous chunks,
// one chunk per worker. fn must only write state owned by its own range.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace tonnsim
