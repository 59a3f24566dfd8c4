#pragma once

#include <cstdint>
#include <functional>

namespace ppck {

// Worker count: explicit request > PPCOKRIG_THREADS > hardware concurrency.
int resolve_threads(int requested);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index owns its
// output slot, so results are identical for any worker count.
void parallel_for(int64_t n, int threads, const std::function<void(int64_t)>& fn);

}  // namespace ppck
