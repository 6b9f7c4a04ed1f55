#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cimbs {

/// Worker count used when the caller passes 0.
inline int default_workers() {
  static const int workers = [] {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return workers;
}

/// Runs `body(chunk)` for every chunk in [0, num_chunks) on up to `workers`
/// threads. Chunks are claimed dynamically; callers write per-chunk results
/// into preallocated slots and combine them in chunk order, which keeps
/// reductions independent of the worker count.
template <class Body>
void for_each_chunk(std::size_t num_chunks, int workers, Body&& body) {
  if (workers <= 0) workers = default_workers();
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(workers), num_chunks);
  if (threads <= 1) {
    for (std::size_t c = 0; c < num_chunks; ++c) body(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    try {
      for (std::size_t c = next.fetch_add(1); c < num_chunks; c = next.fetch_add(1)) body(c);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(num_chunks);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::size_t chunk_count(std::size_t items, std::size_t chunk_size) {
  return (items + chunk_size - 1) / chunk_size;
}

}  // namespace cimbs
