#pragma once

#include <cstddef>
#include <functional>

namespace fedhumor {

/// Runs body(i) for i in [0, count) on up to `threads` workers (threads <= 1
/// runs inline). Each index is visited exactly once; callers write results to
/// per-index slots so the outcome does not depend on scheduling. The first
/// exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace fedhumor
