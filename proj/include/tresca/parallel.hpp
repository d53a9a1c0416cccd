#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace tresca {

// Worker cap from TRESCA_THREADS; 0 or unset means hardware concurrency.
inline int max_workers() {
  if (const char* env = std::getenv("TRESCA_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs f(chunk_index, begin, end) over fixed-size chunks of [0, n). The chunk
// grid is independent of the worker count, so chunk-local accumulation merged
// in chunk order gives bitwise identical results for any TRESCA_THREADS.
template <typename F>
void parallel_chunks(int n, int chunk_size, F&& f) {
  if (n <= 0) return;
  const int num_chunks = (n + chunk_size - 1) / chunk_size;
  const int workers = std::min(max_workers(), num_chunks);
  if (workers <= 1) {
    for (int c = 0; c < num_chunks; ++c)
      f(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
    return;
  }
  std::atomic<int> next{0};
  auto body = [&]() {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= num_chunks) return;
      f(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int i = 1; i < workers; ++i) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
}

}  // namespace tresca
