#pragma once

#include <cstdint>
#include <functional>

namespace ep {

// Global worker count. 0 = hardware concurrency.
void set_num_threads(int n);
int num_threads();

// Runs fn(i) for i in [begin, end) across the worker pool with a static
// partition. Each index is computed by exactly one worker and every
// per-index reduction runs in a fixed order, so results are bit-identical
// regardless of the thread count.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t)>& fn);

// Chunked variant: fn(chunk_begin, chunk_end). Cheaper for tight loops.
void parallel_for_chunked(std::int64_t begin, std::int64_t end,
                          const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace ep
