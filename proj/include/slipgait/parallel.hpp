#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace slipgait {

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Runs fn(i) for i in [0, n) on a bounded pool.  Work items must be
/// independent and write to disjoint slots so results do not depend on the
/// schedule.
template <class Fn>
inline void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  constexpr std::size_t kChunk = 8;
  auto worker = [&] {
    for (;;) {
      const std::size_t begin = next.fetch_add(kChunk);
      if (begin >= n) return;
      const std::size_t end = std::min(begin + kChunk, n);
      for (std::size_t i = begin; i < end; ++i) fn(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace slipgait
