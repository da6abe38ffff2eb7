#include "planewarp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace planewarp {
namespace {

std::atomic<int> g_worker_override{0};

}  // namespace

int worker_count() noexcept {
  const int forced = g_worker_override.load();
  if (forced > 0) return forced;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_worker_count(int count) noexcept { g_worker_override.store(std::max(0, count)); }

void parallel_chunks(int n, int grain, const std::function<void(int, int, int)>& fn) {
  grain = std::max(1, grain);
  const int chunks = chunk_count(n, grain);
  if (chunks == 0) return;
  const int workers = std::min(worker_count(), chunks);
  if (workers == 1) {
    for (int c = 0; c < chunks; ++c) fn(c, c * grain, std::min(n, (c + 1) * grain));
    return;
  }

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (int c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
      try {
        fn(c, c * grain, std::min(n, (c + 1) * grain));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int i = 1; i < workers; ++i) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace planewarp
