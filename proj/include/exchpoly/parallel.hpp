#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace exchpoly {

// Thread cap: EXCHPOLY_THREADS env var; 0 or unset means hardware default.
inline unsigned thread_cap() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const char* env = std::getenv("EXCHPOLY_THREADS");
  if (env == nullptr || *env == '\0') return hw;
  const long v = std::strtol(env, nullptr, 10);
  if (v <= 0) return hw;
  return static_cast<unsigned>(std::min<long>(v, 1024));
}

// Runs body(i) for i in [0, n). Work items must be independent; outputs keyed
// by index stay bit-identical to a serial run regardless of the thread count.
template <class F>
inline void parallel_for(std::size_t n, F&& body) {
  if (n == 0) return;
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(thread_cap(), (n + 1023) / 1024));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::exception_ptr error;
  std::mutex guard;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = n * t / threads;
    const std::size_t hi = n * (t + 1) / threads;
    pool.emplace_back([&, lo, hi]() {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(guard);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace exchpoly
