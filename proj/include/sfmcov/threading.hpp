#pragma once

#include <cstdint>
#include <functional>

namespace sfmcov {

// Resolves a requested worker count: n > 0 takes n; n == 0 consults the
// SFMCOV_THREADS environment variable, then hardware concurrency.
int resolve_threads(int requested);

// Runs fn(begin, end) over contiguous chunks of [0, count). Callers must only
// write to disjoint, index-owned outputs; under that contract results are
// identical for every worker count. Exceptions from workers are rethrown in
// chunk order.
void parallel_for(std::int64_t count, int threads,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

// Caps BLAS/LAPACK internal threading at one thread so factorizations are
// reproducible independently of the worker count. Idempotent.
void pin_blas_single_thread();

}  // namespace sfmcov
