#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wr {

/// Number of hardware threads, at least 1.
inline unsigned hardware_workers() {
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for every i in [0, count) on up to `workers` threads. Items are
/// handed out in contiguous chunks; fn must only write to state owned by item i.
/// The first exception thrown by any item is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  if (count == 0) return;
  const std::size_t nthreads = std::min<std::size_t>(std::max(1u, workers), count);
  if (nthreads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    const std::size_t begin = count * t / nthreads;
    const std::size_t end = count * (t + 1) / nthreads;
    threads.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace wr
