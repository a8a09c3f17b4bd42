#ifndef TSFUSE_PARALLEL_H_
#define TSFUSE_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tsfuse {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work items are pulled
// from a shared counter; callers write results into pre-sized slots indexed
// by i, so output order never depends on scheduling. The first exception
// thrown by any item is rethrown on the calling thread.
template <typename Fn>
void parallel_for(size_t n, int jobs, Fn&& fn) {
  const size_t workers =
      std::min<size_t>(n, static_cast<size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto run = [&] {
    for (size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace tsfuse

#endif  // TSFUSE_PARALLEL_H_
