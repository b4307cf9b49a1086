#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace smtw {

// Worker budget: SMTW_THREADS if set, otherwise the hardware count.
inline unsigned thread_budget() {
  if (const char* env = std::getenv("SMTW_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs fn(0..count-1) across the thread budget. Items must be independent;
// outputs are indexed, so results do not depend on scheduling.
inline void parallel_for(size_t count, const std::function<void(size_t)>& fn) {
  const unsigned workers = std::min<size_t>(thread_budget(), count);
  if (workers <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace smtw
