#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace forge {

/// Fixed pool that splits [0, n) into one contiguous slice per worker. The
/// calling thread takes the first slice. With one thread everything runs inline.
class WorkerPool {
 public:
  explicit WorkerPool(int threads);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int threads() const { return static_cast<int>(workers_.size()) + 1; }

  /// Calls fn(i) for every i in [0, n). If calls throw, the exception from
  /// the lowest slice is rethrown after all slices finish.
  void for_each(int n, const std::function<void(int)>& fn);

  /// Machine parallelism, at least 1.
  static int default_threads();

 private:
  void worker_loop(int slot);
  void run_slice(int slot);

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(int)>* fn_ = nullptr;
  int n_ = 0;
  std::uint64_t generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
  std::vector<std::exception_ptr> errors_;
};

}  // namespace forge
