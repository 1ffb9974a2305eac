#pragma once

#include <cstddef>
#include <functional>

namespace taskvec {

// Effective worker count: explicit request, else TASKVEC_THREADS, else the
// hardware default.
int resolve_threads(int requested);

// Runs fn(i) for i in [0, n) across up to `threads` workers. fn must be safe
// to call concurrently for distinct i; the first exception wins and is
// rethrown after all workers join.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace taskvec
