#pragma once

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <set>

namespace guardian {

/// Monotonic millisecond clock. Everything that sleeps or reads time in the
/// pipeline goes through this interface so that tests can run on virtual time.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() const = 0;
  virtual void sleep_ms(std::int64_t ms) = 0;

  // Runnable-work accounting for virtual clocks: while any blocker is held,
  // virtual time stands still. Real clocks ignore these.
  virtual void add_blocker() {}
  virtual void remove_blocker() {}
};

class SystemClock final : public Clock {
 public:
  std::int64_t now_ms() const override;
  void sleep_ms(std::int64_t ms) override;
};

/// Deterministic virtual clock. Time advances only when no runnable work is
/// blocking it (all workers asleep or idle); it then jumps to the earliest
/// pending wakeup. A sleep from a thread holding no blocker returns
/// immediately with time advanced, which is what plain single-threaded tests
/// want.
class FakeClock final : public Clock {
 public:
  explicit FakeClock(std::int64_t start_ms = 0) : now_(start_ms) {}

  std::int64_t now_ms() const override;
  void sleep_ms(std::int64_t ms) override;

  /// Manually advances virtual time, waking sleepers whose deadline passed.
  void advance_ms(std::int64_t ms);

  void add_blocker() override;
  void remove_blocker() override;

 private:
  void try_advance_locked();

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::int64_t now_ = 0;
  int blockers_ = 0;
  std::multiset<std::int64_t> wakeups_;
};

/// Remaining-time accounting for one task. remaining_ms() is floored at zero
/// and monotonically non-increasing.
struct DeadlineBudget {
  DeadlineBudget(std::shared_ptr<Clock> clk, std::int64_t budget)
      : clock(std::move(clk)), start_ms(clock->now_ms()), budget_ms(budget) {}

  std::int64_t remaining_ms() const {
    std::int64_t left = budget_ms - (clock->now_ms() - start_ms);
    return left > 0 ? left : 0;
  }
  std::int64_t deadline_instant_ms() const { return start_ms + budget_ms; }
  bool expired() const { return remaining_ms() <= 0; }

  std::shared_ptr<Clock> clock;
  std::int64_t start_ms;
  std::int64_t budget_ms;
};

/// Marks the current thread as runnable work for the clock's bookkeeping.
class ScopedWork {
 public:
  explicit ScopedWork(Clock& clock) : clock_(clock) { clock_.add_blocker(); }
  ~ScopedWork() { clock_.remove_blocker(); }
  ScopedWork(const ScopedWork&) = delete;
  ScopedWork& operator=(const ScopedWork&) = delete;

 private:
  Clock& clock_;
};

/// Marks a blocking wait (future, join) so virtual time can advance past it.
class ScopedIdle {
 public:
  explicit ScopedIdle(Clock& clock) : clock_(clock) { clock_.remove_blocker(); }
  ~ScopedIdle() { clock_.add_blocker(); }
  ScopedIdle(const ScopedIdle&) = delete;
  ScopedIdle& operator=(const ScopedIdle&) = delete;

 private:
  Clock& clock_;
};

}  // namespace guardian
