#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace fame {

// Splits [0, n) into at most `jobs` contiguous chunks and runs
// fn(chunk_index, begin, end) for each on its own thread. Chunk boundaries
// depend only on (n, jobs). The first exception thrown by any chunk is
// rethrown after all threads join.
template <class Fn>
void parallel_chunks(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(jobs < 1 ? 1 : jobs, n));
  if (workers <= 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    threads.emplace_back([&, w, begin, end] {
      try {
        fn(w, begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::size_t chunk_count(std::size_t n, int jobs) {
  return std::max<std::size_t>(1, std::min<std::size_t>(jobs < 1 ? 1 : jobs, n));
}

}  // namespace fame
