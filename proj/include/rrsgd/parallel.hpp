#ifndef RRSGD_PARALLEL_HPP
#define RRSGD_PARALLEL_HPP

#include <cstdint>
#include <functional>

namespace rrsgd {

/// Number of workers actually used for `requested` (0 = available parallelism).
int resolve_workers(int requested);

/**
 * Run fn(i) for i = 0 .. count-1 on a pool of `workers` threads.
 *
 * Work items are claimed from an atomic counter, so the assignment of
 * items to threads is nondeterministic; callers must write results into
 * per-item slots and reduce in index order afterwards. That discipline
 * makes every aggregate bitwise independent of the worker count.
 * Exceptions thrown by fn are captured and rethrown on the caller thread.
 */
void parallel_for(std::int64_t count, int workers, const std::function<void(std::int64_t)>& fn);

}  // namespace rrsgd

#endif  // RRSGD_PARALLEL_HPP
