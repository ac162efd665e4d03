#include "steppool/action_queue.hpp"

#include <utility>

#include "steppool/detail/spin.hpp"

namespace steppool {

namespace {

// Enough semaphore tickets to wake every conceivable waiter after shutdown;
// post-shutdown dequeues return before touching the semaphore, so the burst
// is never depleted.
constexpr ptrdiff_t kWakeBurst = 1 << 16;

size_t checked_capacity(int64_t num_envs) {
  if (num_envs < 1) {
    throw InvalidConfigError("ActionQueue needs num_envs >= 1");
  }
  return static_cast<size_t>(2 * num_envs);
}

}  // namespace

ActionQueue::ActionQueue(int64_t num_envs)
    : cells_(checked_capacity(num_envs)), capacity_(cells_.size()) {
  for (uint64_t i = 0; i < capacity_; ++i) {
    cells_[i].seq.store(i, std::memory_order_relaxed);
  }
}

void ActionQueue::enqueue(std::span<ActionMsg> msgs) {
  if (msgs.empty()) return;
  const uint64_t count = msgs.size();
  const uint64_t start = head_.fetch_add(count, std::memory_order_acq_rel);
  if (start + count - tail_.load(std::memory_order_acquire) > capacity_) {
    throw QueueOverflowError("more than 2 * num_envs actions outstanding");
  }
  for (uint64_t i = 0; i < count; ++i) {
    const uint64_t pos = start + i;
    Cell& cell = cells_[pos % capacity_];
    detail::SpinWaiter waiter;
    // Wait for the consumer of this cell's previous lap to finish moving out.
    while (cell.seq.load(std::memory_order_acquire) != pos) waiter.wait();
    cell.msg = std::move(msgs[i]);
    cell.seq.store(pos + 1, std::memory_order_release);
  }
  items_.release(static_cast<ptrdiff_t>(count));
}

std::optional<ActionMsg> ActionQueue::dequeue() {
  // Fast path after shutdown: nothing pending, nothing to wait for.
  if (shutdown_.load(std::memory_order_acquire) &&
      tail_.load(std::memory_order_acquire) >= head_.load(std::memory_order_acquire)) {
    return std::nullopt;
  }
  items_.acquire();
  detail::SpinWaiter waiter;
  for (;;) {
    uint64_t pos = tail_.load(std::memory_order_relaxed);
    if (pos >= head_.load(std::memory_order_acquire)) {
      // Only the shutdown burst hands out tickets with no matching message.
      if (shutdown_.load(std::memory_order_acquire)) return std::nullopt;
      waiter.wait();
      continue;
    }
    if (tail_.compare_exchange_weak(pos, pos + 1, std::memory_order_acq_rel)) {
      Cell& cell = cells_[pos % capacity_];
      detail::SpinWaiter produce_wait;
      while (cell.seq.load(std::memory_order_acquire) != pos + 1) produce_wait.wait();
      ActionMsg msg = std::move(cell.msg);
      cell.seq.store(pos + capacity_, std::memory_order_release);
      return msg;
    }
  }
}

void ActionQueue::shutdown() {
  if (shutdown_.exchange(true, std::memory_order_acq_rel)) return;
  items_.release(kWakeBurst);
}

int64_t ActionQueue::size_approx() const {
  const uint64_t h = head_.load(std::memory_order_acquire);
  const uint64_t t = tail_.load(std::memory_order_acquire);
  return h >= t ? static_cast<int64_t>(h - t) : 0;
}

}  // namespace steppool
