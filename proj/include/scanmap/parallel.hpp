#pragma once

#include <cstddef>
#include <functional>

namespace scanmap {

/// Caps worker threads process-wide; 0 restores the hardware default.
void setMaxThreads(int n);
int maxThreads();

/// Runs fn(i) for i in [0, n) across up to maxThreads() workers.
/// fn must write only to its own pre-assigned output slot; reductions over
/// the slots happen after the join, in index order, so results do not depend
/// on the thread count.
void parallelFor(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace scanmap
