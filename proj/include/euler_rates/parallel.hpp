#pragma once

// Fixed-size worker pool over an index range. Results are written by index,
// so output order never depends on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace euler_rates {

/// Worker count: EULER_RATES_JOBS if set and positive, else `requested`, else
/// hardware concurrency.
inline int resolve_jobs(int requested) {
  if (const char* env = std::getenv("EULER_RATES_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(i) for i in [0, count) on `jobs` threads. The first exception
/// (lowest index) is rethrown after all workers finish.
template <class Body>
void parallel_for(std::size_t count, int jobs, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex guard;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto run = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

/// parallel_for collecting body(i) into a vector in index order.
template <class Body>
auto parallel_map(std::size_t count, int jobs, Body&& body) {
  using T = decltype(body(std::size_t{0}));
  std::vector<T> out(count);
  parallel_for(count, jobs, [&](std::size_t i) { out[i] = body(i); });
  return out;
}

}  // namespace euler_rates
