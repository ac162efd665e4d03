#pragma once

#include <thread>

namespace steppool::detail {

inline void cpu_relax() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_ia32_pause();
#else
  std::this_thread::yield();
#endif
}

// Brief busy spin, then start yielding the timeslice. Waits guarded by this
// are expected to last nanoseconds; the yield keeps a preempted peer runnable
// on machines with few cores.
class SpinWaiter {
 public:
  void wait() noexcept {
    if (spins_ < 64) {
      ++spins_;
      cpu_relax();
    } else {
      std::this_thread::yield();
    }
  }

 private:
  int spins_ = 0;
};

}  // namespace steppool::detail
