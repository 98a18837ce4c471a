// Static-partition parallel loop. Each index is processed exactly once and
// writes only its own outputs, so results never depend on the thread count.
#pragma once

#include <cstddef>
#include <functional>

namespace spadcam {

/// Worker count used by parallel_for; 0 means hardware concurrency.
void set_thread_count(std::size_t threads);
std::size_t thread_count();

/// Calls body(i) for i in [0, count). The first exception thrown by any
/// worker is rethrown on the calling thread after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace spadcam
