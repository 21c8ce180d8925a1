#pragma once

#include <cstddef>
#include <functional>

namespace markov_approx {

/// Paths are simulated in fixed-size chunks; chunk k always draws from the
/// same derived stream, so results do not depend on how many workers run.
inline constexpr std::size_t kPathChunk = 4096;

/// Worker count: hardware concurrency, capped by MARKOV_APPROX_THREADS if set.
unsigned worker_count();

/// Calls body(chunk_index, begin, end) for each chunk of [0, n). Chunks are
/// distributed over worker_count() threads; the first exception thrown by any
/// chunk is rethrown on the calling thread.
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

}  // namespace markov_approx
