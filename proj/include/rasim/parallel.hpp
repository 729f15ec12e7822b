#pragma once

#include <functional>

namespace rasim {

// Maps a thread-count request to an actual count: n > 0 is taken as-is,
// n <= 0 means "all hardware threads".
int resolve_thread_count(int requested);

// Runs fn(chunk_begin, chunk_end) over a static partition of [begin, end).
// Chunks are contiguous and disjoint, so callers that write only to indices
// inside their chunk get results independent of the thread count.
void parallel_for(int begin, int end, int threads,
                  const std::function<void(int, int)>& fn);

}  // namespace rasim
