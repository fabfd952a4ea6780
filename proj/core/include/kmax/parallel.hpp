#pragma once

#include <cstdint>
#include <functional>

namespace kmax {

/// Resolves a requested worker count: values <= 0 mean "use the hardware
/// concurrency", and the result is clamped to [1, 64].
int resolve_workers(int requested);

/// Runs body(begin, end, block_index) over [0, count) split into fixed-size
/// blocks. Blocks are claimed by an atomic counter, so any number of workers
/// produces the same block decomposition; callers write results to
/// preassigned slots, which makes the output independent of scheduling.
/// Exceptions thrown by the body are rethrown on the calling thread.
void parallel_for_blocks(std::int64_t count, std::int64_t block_size, int workers,
                         const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& body);

}  // namespace kmax
