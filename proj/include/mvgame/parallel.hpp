#pragma once

#include <cstddef>
#include <functional>

namespace mvgame {

// Upper bound on worker threads used inside library calls. Defaults to 1.
void set_thread_count(int threads);
int thread_count();

// Runs body(i) for i in [0, count). Each index is handled by exactly one
// worker; callers write results into per-index slots and fold them afterwards
// in index order, so results never depend on the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace mvgame
