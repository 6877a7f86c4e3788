#include "gsfm/parallel.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gsfm {
namespace {

std::atomic<int> g_num_threads{1};

}  // namespace

void SetNumThreads(int num_threads) {
  g_num_threads.store(std::max(1, num_threads));
}

int GetNumThreads() { return g_num_threads.load(); }

void ParallelFor(std::size_t begin, std::size_t end,
                 const std::function<void(std::size_t)>& fn) {
  if (end <= begin) {
    return;
  }
  const std::size_t count = end - begin;
  const std::size_t num_threads =
      std::min<std::size_t>(static_cast<std::size_t>(GetNumThreads()), count);
  if (num_threads <= 1 || count < 64) {
    for (std::size_t i = begin; i < end; ++i) {
      fn(i);
    }
    return;
  }

  std::exception_ptr error;
  std::mutex error_mutex;
  const std::size_t chunk = (count + num_threads - 1) / num_threads;
  std::vector<std::thread> workers;
  workers.reserve(num_threads);
  for (std::size_t t = 0; t < num_threads; ++t) {
    const std::size_t lo = begin + t * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) {
      break;
    }
    workers.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) {
          fn(i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
      }
    });
  }
  for (auto& worker : workers) {
    worker.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

}  // namespace gsfm
