#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace solenoid {

// Thread budget: explicit value if positive, else SOLENOID_THREADS, else 1.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SOLENOID_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

// Runs fn(block) for block in [0, nblocks). Block boundaries never depend on
// the thread count, so results stored per block are reproducible.
template <class Fn>
void parallel_blocks(std::size_t nblocks, int threads, Fn&& fn) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(nblocks)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < nblocks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= nblocks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(nblocks);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace solenoid
