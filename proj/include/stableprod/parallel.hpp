#pragma once

// Work partitioning by sample index. Chunk boundaries depend only on the
// index range, never on the worker count, and every sample draws from its own
// substream, so results are identical for any number of workers.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace stableprod {

inline constexpr std::uint64_t kChunkSize = 2048;

/// Calls fn(first, last, chunk_index) for consecutive chunks of [begin, end).
template <class Fn>
void for_each_chunk(std::uint64_t begin, std::uint64_t end, unsigned workers,
                    Fn&& fn) {
  if (end <= begin) return;
  const std::uint64_t chunks = (end - begin + kChunkSize - 1) / kChunkSize;
  auto run_chunk = [&](std::uint64_t c) {
    const std::uint64_t first = begin + c * kChunkSize;
    fn(first, std::min(end, first + kChunkSize), c);
  };
  workers = std::max(1u, workers);
  if (workers == 1 || chunks == 1) {
    for (std::uint64_t c = 0; c < chunks; ++c) run_chunk(c);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        run_chunk(c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(chunks);
        return;
      }
    }
  };
  const auto threads = static_cast<unsigned>(
      std::min<std::uint64_t>(workers, chunks));
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();
  if (failure) std::rethrow_exception(failure);
}

/// Integer count vectors summed over chunks. Addition of counts is exact, so
/// merge order cannot change the result.
template <class Fn>
std::vector<std::uint64_t> sum_counts(std::uint64_t begin, std::uint64_t end,
                                      unsigned workers, std::size_t width,
                                      Fn&& count_chunk) {
  const std::uint64_t chunks =
      end > begin ? (end - begin + kChunkSize - 1) / kChunkSize : 0;
  std::vector<std::vector<std::uint64_t>> partial(chunks);
  for_each_chunk(begin, end, workers,
                 [&](std::uint64_t first, std::uint64_t last, std::uint64_t c) {
                   partial[c] = count_chunk(first, last);
                 });
  std::vector<std::uint64_t> total(width, 0);
  for (const auto& counts : partial) {
    for (std::size_t j = 0; j < width; ++j) total[j] += counts[j];
  }
  return total;
}

/// Per-chunk partial results folded in chunk order, so floating-point sums are
/// identical for any worker count.
template <class T, class Fn, class Merge>
T reduce_chunks(std::uint64_t begin, std::uint64_t end, unsigned workers, T init,
                Fn&& chunk_fn, Merge&& merge) {
  const std::uint64_t chunks =
      end > begin ? (end - begin + kChunkSize - 1) / kChunkSize : 0;
  std::vector<T> partial(chunks, init);
  for_each_chunk(begin, end, workers,
                 [&](std::uint64_t first, std::uint64_t last, std::uint64_t c) {
                   partial[c] = chunk_fn(first, last);
                 });
  T total = init;
  for (const auto& part : partial) total = merge(total, part);
  return total;
}

}  // namespace stableprod
