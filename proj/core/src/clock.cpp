#include "guardian/clock.hpp"

#include <chrono>
#include <thread>

namespace guardian {

std::int64_t SystemClock::now_ms() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void SystemClock::sleep_ms(std::int64_t ms) {
  if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

std::int64_t FakeClock::now_ms() const {
  std::lock_guard<std::mutex> lock(mu_);
  return now_;
}

void FakeClock::sleep_ms(std::int64_t ms) {
  if (ms <= 0) return;
  std::unique_lock<std::mutex> lock(mu_);
  const std::int64_t wake = now_ + ms;
  wakeups_.insert(wake);
  --blockers_;
  try_advance_locked();
  cv_.wait(lock, [&] { return now_ >= wake; });
  ++blockers_;
  wakeups_.erase(wakeups_.find(wake));
}

void FakeClock::advance_ms(std::int64_t ms) {
  std::lock_guard<std::mutex> lock(mu_);
  now_ += ms;
  cv_.notify_all();
}

void FakeClock::add_blocker() {
  std::lock_guard<std::mutex> lock(mu_);
  ++blockers_;
}

void FakeClock::remove_blocker() {
  std::lock_guard<std::mutex> lock(mu_);
  --blockers_;
  try_advance_locked();
}

void FakeClock::try_advance_locked() {
  if (blockers_ <= 0 && !wakeups_.empty()) {
    const std::int64_t next = *wakeups_.begin();
    if (next > now_) now_ = next;
    cv_.notify_all();
  }
}

}  // namespace guardian
