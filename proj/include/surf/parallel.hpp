#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace surf {

/// Worker count for `requested` (0 = hardware concurrency), never more than
/// the number of tasks.
inline unsigned resolve_threads(unsigned requested, std::uint64_t tasks) {
  unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (tasks < n) n = static_cast<unsigned>(std::max<std::uint64_t>(tasks, 1));
  return n;
}

/// Calls fn(i) for every i in [0, tasks) on up to `threads` workers, pulling
/// indices from a shared counter. Callers that write into slot i of a
/// preallocated vector and merge the slots in index order get results that
/// do not depend on the schedule. The first exception is rethrown.
template <class Fn>
void parallel_for(std::uint64_t tasks, unsigned threads, Fn&& fn) {
  const unsigned workers = resolve_threads(threads, tasks);
  if (workers <= 1) {
    for (std::uint64_t i = 0; i < tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= tasks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(tasks, std::memory_order_relaxed);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace surf
