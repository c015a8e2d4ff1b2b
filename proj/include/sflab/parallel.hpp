#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace sflab {

// Worker count from SFLAB_THREADS; default 1 (serial).
inline int worker_count() {
  const char* env = std::getenv("SFLAB_THREADS");
  if (!env) return 1;
  int n = std::atoi(env);
  return n < 1 ? 1 : n;
}

// Runs body(i) for i in [begin, end) on contiguous index blocks, one per
// worker. The partition depends only on the range and worker count, and
// bodies must write to disjoint slots, so results are deterministic for
// every thread count.
template <typename F>
void parallel_for(long begin, long end, const F& body) {
  long span = end - begin;
  int workers = worker_count();
  if (workers > span) workers = static_cast<int>(span);
  if (workers <= 1) {
    for (long i = begin; i < end; ++i) body(i);
    return;
  }
  long chunk = (span + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    long lo = begin + w * chunk;
    long hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (long i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace sflab
