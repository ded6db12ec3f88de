#include "guardian/executor.hpp"

#include <algorithm>

namespace guardian {

WorkerPool::WorkerPool(int threads, std::shared_ptr<Clock> clock)
    : clock_(std::move(clock)) {
  if (threads < 1) threads = 1;
  starting_ = threads;
  threads_.reserve(static_cast<std::size_t>(threads));
  for (int i = 0; i < threads; ++i)
    threads_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  for (auto& thread : threads_) thread.join();
}

void WorkerPool::sync_blockers_locked() {
  const int desired = std::min(pending_, free_ + starting_) + running_;
  while (held_ < desired) {
    clock_->add_blocker();
    ++held_;
  }
  while (held_ > desired) {
    clock_->remove_blocker();
    --held_;
  }
}

void WorkerPool::worker_loop() {
  std::unique_lock<std::mutex> lock(mu_);
  --starting_;
  ++free_;
  sync_blockers_locked();
  for (;;) {
    cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
    if (queue_.empty()) {
      --free_;
      sync_blockers_locked();
      return;  // stop requested and drained
    }
    std::function<void()> task = std::move(queue_.front());
    queue_.pop_front();
    --pending_;
    --free_;
    ++running_;
    sync_blockers_locked();
    lock.unlock();
    task();  // packaged_task captures exceptions
    lock.lock();
    --running_;
    ++free_;
    sync_blockers_locked();
  }
}

}  // namespace guardian
