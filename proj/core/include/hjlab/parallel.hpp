#pragma once

#include <cstdint>
#include <functional>

namespace hjlab {

/// Process-wide worker count used by `parallel_for`. Defaults to 1.
void set_thread_count(int n);
int thread_count();

/// Runs `body(begin, end)` over a static partition of [0, n). The partition
/// depends only on n and the thread count, and every index is handled by
/// exactly one call, so results written per index are schedule-independent.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace hjlab
