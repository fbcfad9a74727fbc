#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace robising {

/// Worker count: hardware concurrency, capped by ROBUST_ISING_THREADS when set.
int worker_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
/// handled by exactly one call, so per-index outputs are independent of the
/// thread count. The first exception thrown by any chunk is rethrown.
template <typename Body>
void parallel_for(std::int64_t n, Body&& body, int threads = worker_count()) {
  if (n <= 0) return;
  const std::int64_t workers = std::clamp<std::int64_t>(threads, 1, n);
  if (workers == 1) {
    body(std::int64_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (std::int64_t w = 0; w < workers; ++w) {
    const std::int64_t lo = w * chunk;
    const std::int64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, w, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace robising
