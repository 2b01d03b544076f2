#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace mseg::detail {

inline constexpr std::size_t kChunk = 256;

/// Runs fn(begin, end) over fixed-size chunks of [0, n). Chunk boundaries do
/// not depend on the worker count, so per-item results are identical for any
/// degree of parallelism.
template <typename Fn>
void parallel_chunks(std::size_t n, std::size_t workers, Fn&& fn) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  workers = std::max<std::size_t>(1, std::min(workers, chunks));
  auto run = [&](std::size_t w) {
    for (std::size_t c = w; c < chunks; c += workers) fn(c * kChunk, std::min(n, (c + 1) * kChunk));
  };
  if (workers == 1) {
    run(0);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(run, w);
  run(0);
  for (auto& t : threads) t.join();
}

}  // namespace mseg::detail
