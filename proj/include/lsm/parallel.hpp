#ifndef LSM_PARALLEL_HPP_
#define LSM_PARALLEL_HPP_

#include <algorithm>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace lsm {

// Runs fn(i) for i in [0, count) on up to n_threads workers.  Work is
// pre-partitioned into contiguous blocks and each item writes only to its own
// result slot, so the outcome is identical for any thread count.
inline void parallel_for(int count, int n_threads,
                         const std::function<void(int)>& fn) {
  n_threads = std::max(1, n_threads);
  if (count <= 0) return;
  if (n_threads == 1 || count == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  n_threads = std::min(n_threads, count);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(n_threads);
  for (int w = 0; w < n_threads; ++w) {
    const int begin = static_cast<int>(static_cast<long long>(count) * w / n_threads);
    const int end = static_cast<int>(static_cast<long long>(count) * (w + 1) / n_threads);
    workers.emplace_back([&, begin, end] {
      try {
        for (int i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace lsm

#endif  // LSM_PARALLEL_HPP_
