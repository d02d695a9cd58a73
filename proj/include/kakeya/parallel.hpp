#pragma once

// Minimal data-parallel loop. Work items write into their own output slots,
// and callers reduce those slots in index order, so results are identical for
// any thread count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace kakeya {

namespace detail {
inline int& thread_setting() {
  static int threads = 0;  // 0 = not set explicitly
  return threads;
}
}  // namespace detail

/// Number of worker threads; falls back to KAKEYA_LAB_THREADS, then 1.
inline int thread_count() {
  int t = detail::thread_setting();
  if (t > 0) return t;
  if (const char* env = std::getenv("KAKEYA_LAB_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

inline void set_thread_count(int n) { detail::thread_setting() = std::max(0, n); }

/// Calls body(i) for i in [0, n). Exceptions are rethrown on the caller,
/// lowest failing index first.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const auto workers = static_cast<std::size_t>(std::min<long>(thread_count(), static_cast<long>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = n;
  std::exception_ptr err;
  auto run = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

/// parallel_for that collects one result per index, in index order.
template <class T, class Body>
std::vector<T> parallel_map(std::size_t n, Body&& body) {
  std::vector<T> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = body(i); });
  return out;
}

}  // namespace kakeya
