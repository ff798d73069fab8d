// Minimal fork-join helper. Work is split into contiguous index ranges with
// disjoint writes; on a single hardware thread everything runs inline, so
// results never depend on the thread count.
#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace diasep {

inline void parallel_for(std::size_t begin, std::size_t end,
                         const std::function<void(std::size_t)>& body) {
  const std::size_t n = end > begin ? end - begin : 0;
  if (n == 0) return;
  std::size_t threads = std::thread::hardware_concurrency();
  if (threads == 0) threads = 1;
  if (threads <= 1 || n == 1) {
    for (std::size_t i = begin; i < end; ++i) body(i);
    return;
  }
  if (threads > n) threads = n;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t lo = begin + n * w / threads;
    const std::size_t hi = begin + n * (w + 1) / threads;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace diasep
