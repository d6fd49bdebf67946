#pragma once

#include <cstddef>
#include <functional>

namespace tnid {

// Number of worker threads used by parallel_for. Defaults to
// hardware_concurrency, overridable with the TNID_THREADS env var or
// set_thread_count(). Reductions stay deterministic for a fixed thread
// count: workers own contiguous index ranges and partials are combined
// in range order.
std::size_t thread_count();
void set_thread_count(std::size_t n);

// Runs fn(begin, end, worker) over [0, n) split into contiguous chunks,
// one per worker. worker indexes the chunk (0-based, ascending with begin).
// Executes inline when a single thread suffices. Exceptions from workers
// are rethrown (first one wins).
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

} // namespace tnid
