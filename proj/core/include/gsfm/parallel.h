#pragma once

#include <cstddef>
#include <functional>

namespace gsfm {

// Process-wide thread budget used by every parallel loop. Defaults to 1.
void SetNumThreads(int num_threads);
int GetNumThreads();

// Calls fn(i) for i in [begin, end). Work is split into contiguous chunks,
// one per thread. fn must only write to per-index storage; callers reduce
// sequentially afterwards so results do not depend on the thread count.
// The first exception thrown by any chunk is rethrown on the calling thread.
void ParallelFor(std::size_t begin, std::size_t end,
                 const std::function<void(std::size_t)>& fn);

}  // namespace gsfm
