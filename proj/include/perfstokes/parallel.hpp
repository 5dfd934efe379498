#pragma once

#include <cstddef>
#include <functional>

namespace perfstokes {

/// Worker count from PERFSTOKES_THREADS (default 1).
int worker_count();

/// Runs job(i) for i in [0, count) on up to worker_count() threads. Each job
/// writes only to its own slot, so results do not depend on scheduling. The
/// first exception (by index) is rethrown after all jobs finish.
void run_indexed(std::size_t count, const std::function<void(std::size_t)>& job);

}  // namespace perfstokes
