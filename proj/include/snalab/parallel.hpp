#pragma once

// Deterministic grid parallelism. Work is split into contiguous index chunks;
// every index writes only to its own output slot, so results are bitwise
// independent of the worker count. SNA_LAB_THREADS caps workers (0 = auto).

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

#include "snalab/common.hpp"

namespace snalab {

// Resolve the worker count: explicit override > SNA_LAB_THREADS > hardware.
inline int thread_count(int override_threads = -1) {
  if (override_threads > 0) return override_threads;
  if (const char* env = std::getenv("SNA_LAB_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<int>(v);
    // 0 or garbage falls through to auto
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

// Run body(i) for i in [0, count). Exceptions are rethrown deterministically:
// the one raised at the smallest index wins.
template <class Body>
void parallel_for(std::int64_t count, Body&& body, int override_threads = -1) {
  if (count <= 0) return;
  int workers = thread_count(override_threads);
  if (workers > count) workers = static_cast<int>(count);

  if (workers <= 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }

  std::vector<std::exception_ptr> errors(workers, nullptr);
  std::vector<std::int64_t> error_index(workers, -1);
  std::vector<std::thread> pool;
  pool.reserve(workers);

  const std::int64_t chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = w * chunk;
    const std::int64_t hi = std::min(count, lo + chunk);
    pool.emplace_back([&, w, lo, hi]() {
      for (std::int64_t i = lo; i < hi; ++i) {
        try {
          body(i);
        } catch (...) {
          errors[w] = std::current_exception();
          error_index[w] = i;
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();

  std::exception_ptr first = nullptr;
  std::int64_t first_index = -1;
  for (int w = 0; w < workers; ++w) {
    if (errors[w] && (first_index < 0 || error_index[w] < first_index)) {
      first = errors[w];
      first_index = error_index[w];
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace snalab
