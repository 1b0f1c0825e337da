#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace admmcert {

/// Worker count from ADMM_CERTIFY_THREADS (0 or unset = hardware concurrency).
inline unsigned sweep_threads() {
  unsigned n = 0;
  if (const char* env = std::getenv("ADMM_CERTIFY_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) n = static_cast<unsigned>(v);
    } catch (const std::exception&) {
      n = 0;
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Calls fn(i) for i in [0, count). Items are independent; callers write
/// results into slot i so the outcome does not depend on scheduling. The
/// first exception thrown by any item is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned threads = sweep_threads()) {
  threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace admmcert
