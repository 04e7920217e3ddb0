// Minimal blocked parallel-for used by the Monte Carlo drivers.  Work items
// must be independent; determinism is guaranteed by indexed outputs plus
// per-item RNG substreams, so the thread count never changes results.
#pragma once

#include <cstddef>
#include <functional>

namespace trendcca {

// Number of worker threads actually used for `requested` (0 = hardware).
unsigned effective_threads(unsigned requested);

// Runs fn(begin, end) over a partition of [0, n).  With one thread the call
// is inlined on the caller's thread.  Exceptions thrown by fn are rethrown
// on the calling thread (first one wins).
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn,
                  unsigned threads = 0);

}  // namespace trendcca
