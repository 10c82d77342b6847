#pragma once

#include <cstddef>
#include <functional>

namespace stabilab {

/// Worker count for fan-out: the STABILITY_LAB_THREADS environment
/// variable when set to a positive integer, hardware concurrency
/// otherwise, clamped to [1, task_count].
std::size_t worker_count(std::size_t task_count);

/// Runs task(0..n-1) across worker_count(n) threads. Tasks must touch
/// disjoint state; results are schedule-independent because every task is
/// a pure function of its index. With one worker this is a plain loop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

}  // namespace stabilab
