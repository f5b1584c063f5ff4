#pragma once
// Minimal per-index fan-out used for per-session work. Worker count comes
// from GAP_RERANKER_THREADS (0 or unset = hardware concurrency).

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace gapreranker {

inline unsigned worker_count() {
  unsigned count = 0;
  if (const char* env = std::getenv("GAP_RERANKER_THREADS")) {
    count = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
  }
  if (count == 0) count = std::max(1u, std::thread::hardware_concurrency());
  return count;
}

// Runs fn(i) for i in [0, n). fn must only touch its own slot of any shared
// output; results are deterministic because work is indexed, not batched.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        fn(i);
      }
    });
  }
  for (auto& thread : threads) thread.join();
}

}  // namespace gapreranker
