#pragma once

#include <cstddef>
#include <functional>

namespace tpr {

/// Worker count: TPR_THREADS if set to a positive integer, otherwise the
/// hardware concurrency.
int thread_count();

/// Runs fn(i) for i in [0, n) across thread_count() workers. Each index is
/// visited exactly once; callers write to disjoint outputs per index so the
/// result does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace tpr
