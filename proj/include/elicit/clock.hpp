#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>

namespace elicit {

/// Time source for trace timestamps. Offline runs (scripted components,
/// record/replay gateway modes) use LogicalClock so that two runs of the
/// same configuration serialize byte-identically; live runs use WallClock.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() = 0;
};

class WallClock final : public Clock {
 public:
  std::int64_t now_ms() override {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
  }
};

/// Monotone counter starting at 0; each query advances one tick.
class LogicalClock final : public Clock {
 public:
  std::int64_t now_ms() override { return ticks_.fetch_add(1); }

 private:
  std::atomic<std::int64_t> ticks_{0};
};

}  // namespace elicit
