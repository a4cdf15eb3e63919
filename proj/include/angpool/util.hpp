#pragma once

#include <cstddef>
#include <functional>
#include <string>

namespace angpool {

// Shortest decimal representation that round-trips to the same double.
// Used for all CSV output so reruns are byte-identical.
std::string fmt_double(double value);

// Worker cap from ANGULAR_POOL_THREADS (falls back to the hardware count).
unsigned worker_thread_cap();

// Runs fn(0..n-1), possibly on several threads. Each index must touch only
// its own output slot; results are then independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace angpool
