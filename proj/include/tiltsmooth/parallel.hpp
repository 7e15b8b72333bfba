#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace tiltsmooth {

/// Runs f(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to slot i by the caller, so the outcome does not depend on the
/// schedule. If any call throws, the exception from the lowest index is
/// rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  if (n == 0)
    return;
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto run = [&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t)
      pool.emplace_back(run);
    run();
  }
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace tiltsmooth
