#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace holostab {

// hardware threads, capped by HOLOSTAB_THREADS when set
inline int worker_count() {
  int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* s = std::getenv("HOLOSTAB_THREADS")) {
    int v = std::atoi(s);
    if (v > 0) hw = std::min(hw, v);
  }
  return hw;
}

// fn(k) for k in [0, count), jobs handed out through a shared counter
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, int threads = 0) {
  if (count == 0) return;
  if (threads <= 0) threads = worker_count();
  threads = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next++) < count;) fn(k);
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

}  // namespace holostab
