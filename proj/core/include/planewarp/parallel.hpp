#pragma once

#include <functional>

namespace planewarp {

/// Number of worker threads used by the row-parallel kernels (>= 1).
int worker_count() noexcept;

/// Overrides the worker count; 0 restores the hardware default.
void set_worker_count(int count) noexcept;

/// Calls fn(begin, end) on disjoint contiguous chunks of [0, n). Chunk
/// boundaries depend only on n and `grain`, never on the thread count, so
/// callers that reduce per-chunk partials in chunk order stay bit-reproducible.
void parallel_chunks(int n, int grain, const std::function<void(int chunk, int begin, int end)>& fn);

/// Number of chunks parallel_chunks(n, grain, ...) will produce.
inline int chunk_count(int n, int grain) { return n <= 0 ? 0 : (n + grain - 1) / grain; }

}  // namespace planewarp
