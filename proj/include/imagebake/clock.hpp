#pragma once

#include <atomic>
#include <cstdint>

#include "imagebake/errors.hpp"

namespace imagebake {

using Tick = int64_t;

// Injected logical time. Everything that needs "now" reads one of these, so
// runs are reproducible and the simulator owns the timeline.
class LogicalClock {
 public:
  explicit LogicalClock(Tick start = 0) : now_(start) {}

  Tick now() const { return now_.load(std::memory_order_relaxed); }

  void advance_to(Tick t) {
    Tick cur = now_.load(std::memory_order_relaxed);
    if (t < cur)
      throw Error(ErrorCode::InvalidTimestamp,
                  "clock may not move backwards (" + std::to_string(cur) + " -> " +
                      std::to_string(t) + ")");
    now_.store(t, std::memory_order_relaxed);
  }

  void advance_by(Tick delta) { advance_to(now() + delta); }

 private:
  std::atomic<Tick> now_;
};

}  // namespace imagebake
