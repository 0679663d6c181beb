#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dynperc {

// Resolves the worker count: DYNPERC_WORKERS wins over the requested value;
// 0 means "one per hardware thread".
std::size_t resolve_workers(std::size_t requested);

// Runs fn(i) for i in [0, n) on up to `workers` threads and returns results
// in index order. Callers reduce the returned vector sequentially, so the
// outcome never depends on the worker count.
template <class Fn>
auto parallel_map(std::size_t n, std::size_t workers, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t{0}))> {
  using Result = decltype(fn(std::size_t{0}));
  std::vector<Result> out(n);
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          out[i] = fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

// Monte Carlo budgets are cut into fixed-size chunks (independent of the
// worker count); chunk k always uses seed-stream index k.
struct ChunkPlan {
  std::size_t total;
  std::size_t chunk;

  std::size_t count() const { return total == 0 ? 0 : (total + chunk - 1) / chunk; }
  std::size_t size_of(std::size_t k) const {
    return std::min(chunk, total - k * chunk);
  }
};

}  // namespace dynperc
