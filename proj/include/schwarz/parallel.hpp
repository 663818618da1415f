#pragma once

#include <cstddef>
#include <functional>

namespace schwarz {

/// Number of worker threads used by parallel kernels. Defaults to the
/// hardware concurrency, capped by the SCHWARZ_WORKERS environment variable.
std::size_t worker_count();

/// Replaces the hardware concurrency as the base worker count (still capped
/// by SCHWARZ_WORKERS). Zero restores the default. Used to exercise the
/// threaded paths on small machines.
void set_worker_count(std::size_t n);

/// Runs body(i) for i in [0, n) on the worker pool. Indices are split into
/// contiguous chunks; every index is visited exactly once. Callers must
/// only write to index-private outputs so results match serial execution.
/// At most n / grain workers are started.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t grain = 1);

} // namespace schwarz
