#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hpnfft {

inline int hardware_workers() {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Splits [0, count) into `workers` contiguous blocks and calls
/// `fn(worker, begin, end)` once per block, one thread per block.
/// Block boundaries depend only on (count, workers).
template <class Fn>
void parallel_blocks(std::size_t count, int workers, Fn&& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || count < 2) {
    fn(0, std::size_t{0}, count);
    return;
  }
  const auto w = static_cast<std::size_t>(workers);
  std::vector<std::thread> threads;
  threads.reserve(w);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t i = 0; i < w; ++i) {
    const std::size_t begin = count * i / w;
    const std::size_t end = count * (i + 1) / w;
    threads.emplace_back([&, i, begin, end] {
      try {
        fn(static_cast<int>(i), begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace hpnfft
