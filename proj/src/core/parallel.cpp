#include "forge/core/parallel.hpp"

#include <algorithm>

namespace forge {

WorkerPool::WorkerPool(int threads) {
  const int extra = std::max(threads, 1) - 1;
  errors_.resize(static_cast<std::size_t>(extra) + 1);
  for (int i = 0; i < extra; ++i) workers_.emplace_back([this, i] { worker_loop(i + 1); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  start_cv_.notify_all();
  for (auto& w : workers_) w.join();
}

int WorkerPool::default_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

void WorkerPool::run_slice(int slot) {
  const int t = threads();
  const int begin = static_cast<int>(static_cast<long long>(n_) * slot / t);
  const int end = static_cast<int>(static_cast<long long>(n_) * (slot + 1) / t);
  try {
    for (int i = begin; i < end; ++i) (*fn_)(i);
  } catch (...) {
    errors_[static_cast<std::size_t>(slot)] = std::current_exception();
  }
}

void WorkerPool::worker_loop(int slot) {
  std::uint64_t seen = 0;
  for (;;) {
    {
      std::unique_lock lock(mu_);
      start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
    }
    run_slice(slot);
    {
      std::lock_guard lock(mu_);
      if (--pending_ == 0) done_cv_.notify_one();
    }
  }
}

void WorkerPool::for_each(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  std::fill(errors_.begin(), errors_.end(), nullptr);
  fn_ = &fn;
  n_ = n;
  if (!workers_.empty()) {
    {
      std::lock_guard lock(mu_);
      pending_ = static_cast<int>(workers_.size());
      ++generation_;
    }
    start_cv_.notify_all();
  }
  run_slice(0);
  if (!workers_.empty()) {
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [&] { return pending_ == 0; });
  }
  fn_ = nullptr;
  for (auto& e : errors_) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace forge
