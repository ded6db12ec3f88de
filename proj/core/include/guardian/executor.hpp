#pragma once

#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <thread>
#include <vector>

#include "guardian/clock.hpp"

namespace guardian {

/// Fixed-size worker pool integrated with the clock's runnable-work
/// accounting: virtual time is blocked exactly while a task is running or a
/// queued task has a worker available to pick it up, so virtual timestamps
/// are deterministic regardless of real thread speeds.
class WorkerPool {
 public:
  WorkerPool(int threads, std::shared_ptr<Clock> clock);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  template <typename F>
  auto submit(F&& fn) -> std::future<std::invoke_result_t<F>> {
    using R = std::invoke_result_t<F>;
    auto task = std::make_shared<std::packaged_task<R()>>(std::forward<F>(fn));
    std::future<R> future = task->get_future();
    {
      std::lock_guard<std::mutex> lock(mu_);
      queue_.emplace_back([task] { (*task)(); });
      ++pending_;
      sync_blockers_locked();
    }
    cv_.notify_one();
    return future;
  }

  int thread_count() const { return static_cast<int>(threads_.size()); }

 private:
  void worker_loop();
  // Target blocker count: min(pending, free + not-yet-started) + running.
  void sync_blockers_locked();

  std::shared_ptr<Clock> clock_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  bool stop_ = false;
  int pending_ = 0;
  int free_ = 0;
  int starting_ = 0;
  int running_ = 0;
  int held_ = 0;
  std::vector<std::thread> threads_;
};

/// Waits on a future while marking the calling thread idle, so a virtual
/// clock can advance past the wait.
template <typename T>
T await(Clock& clock, std::future<T>& future) {
  ScopedIdle idle(clock);
  return future.get();
}

}  // namespace guardian
