#ifndef DLOE_PARALLEL_HPP_
#define DLOE_PARALLEL_HPP_

#include <functional>

namespace dloe {

// Worker count: DLOE_THREADS if set and positive, else hardware concurrency.
int DefaultThreadCount();

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// visited exactly once; callers must write only to index-private state.
void ParallelFor(int count, const std::function<void(int)>& body,
                 int threads = 0);

}  // namespace dloe

#endif  // DLOE_PARALLEL_HPP_
