#include "steppool/state_queue.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

#include "steppool/detail/spin.hpp"

namespace steppool {

namespace {

constexpr ptrdiff_t kWakeBurst = 1 << 16;

// Grace period for a descriptor still held by a consumer mid-delivery before
// the wait is declared a protocol breach. Genuine handoffs take nanoseconds.
constexpr auto kFreeWaitGrace = std::chrono::milliseconds(250);

StateBatch fresh_batch(int64_t batch, const ObsLayout& layout) {
  StateBatch b;
  b.size = batch;
  b.obs_layout = layout;
  b.env_ids.resize(batch);
  b.rewards.resize(batch);
  b.dones.resize(batch);
  b.truncateds.resize(batch);
  b.elapsed_steps.resize(batch);
  b.observations.resize(batch * layout.bytes());
  return b;
}

}  // namespace

void StateBatch::sort_by_env_id() {
  std::vector<int64_t> order(size);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [this](int64_t a, int64_t b) { return env_ids[a] < env_ids[b]; });

  StateBatch sorted = fresh_batch(size, obs_layout);
  const int64_t row_bytes = obs_layout.bytes();
  for (int64_t row = 0; row < size; ++row) {
    const int64_t src = order[row];
    sorted.env_ids[row] = env_ids[src];
    sorted.rewards[row] = rewards[src];
    sorted.dones[row] = dones[src];
    sorted.truncateds[row] = truncateds[src];
    sorted.elapsed_steps[row] = elapsed_steps[src];
    std::memcpy(sorted.obs_row(row), obs_row(src), row_bytes);
  }
  *this = std::move(sorted);
}

int64_t StateQueue::ring_depth_for(int32_t batch_size, int32_t num_envs) {
  if (batch_size < 1 || batch_size > num_envs) {
    throw InvalidConfigError("StateQueue needs 1 <= batch_size <= num_envs");
  }
  return (num_envs + batch_size - 1) / batch_size + 1;
}

StateQueue::StateQueue(int32_t batch_size, int32_t num_envs, ObsLayout layout)
    : batch_(batch_size),
      layout_(std::move(layout)),
      blocks_(static_cast<size_t>(ring_depth_for(batch_size, num_envs))) {
  for (size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].free_for_gen.store(static_cast<int64_t>(i), std::memory_order_relaxed);
    blocks_[i].slot_written.assign(static_cast<size_t>(batch_), 0);
  }
  arm_block(blocks_[0], 0);
}

void StateQueue::arm_block(Block& b, int64_t generation) {
  b.storage = fresh_batch(batch_, layout_);
  std::fill(b.slot_written.begin(), b.slot_written.end(), 0);
  b.written.store(0, std::memory_order_relaxed);
  b.armed_gen.store(generation, std::memory_order_release);
}

SlotHandle StateQueue::allocate() {
  const int64_t counter = alloc_.fetch_add(1, std::memory_order_acq_rel);
  const int64_t generation = counter / batch_;
  const int32_t offset = static_cast<int32_t>(counter % batch_);
  Block& b = blocks_[static_cast<size_t>(generation) % blocks_.size()];

  if (offset == 0) {
    if (b.armed_gen.load(std::memory_order_acquire) != generation) {
      // First slot of a new generation arms fresh buffers once the previous
      // occupant of this descriptor has been consumed.
      const auto deadline = std::chrono::steady_clock::now() + kFreeWaitGrace;
      detail::SpinWaiter waiter;
      while (b.free_for_gen.load(std::memory_order_acquire) != generation) {
        if (std::chrono::steady_clock::now() >= deadline) {
          throw RingExhaustedError(
              "state ring descriptor reused before its batch was consumed");
        }
        waiter.wait();
      }
      arm_block(b, generation);
    }
  } else {
    detail::SpinWaiter waiter;
    while (b.armed_gen.load(std::memory_order_acquire) < generation) waiter.wait();
  }

  SlotHandle h;
  h.generation = generation;
  h.offset = offset;
  h.env_id = &b.storage.env_ids[offset];
  h.reward = &b.storage.rewards[offset];
  h.done = &b.storage.dones[offset];
  h.truncated = &b.storage.truncateds[offset];
  h.elapsed_step = &b.storage.elapsed_steps[offset];
  h.observation = b.storage.obs_row(offset);
  h.block = &b;
  return h;
}

void StateQueue::mark_written(const SlotHandle& handle) {
  Block& b = *static_cast<Block*>(handle.block);
  if (b.slot_written[handle.offset]) {
    throw ProtocolViolationError("state slot marked written twice");
  }
  b.slot_written[handle.offset] = 1;
  const int32_t written = b.written.fetch_add(1, std::memory_order_acq_rel) + 1;
  if (written == batch_) {
    b.complete_gen.store(handle.generation, std::memory_order_release);
    ready_.release();
  }
}

std::optional<StateBatch> StateQueue::take_front() {
  const int64_t generation = next_out_.fetch_add(1, std::memory_order_acq_rel);
  Block& b = blocks_[static_cast<size_t>(generation) % blocks_.size()];
  detail::SpinWaiter waiter;
  // A later generation can signal readiness slightly before an earlier one;
  // delivery stays in generation order, so wait for this block specifically.
  while (b.complete_gen.load(std::memory_order_acquire) < generation) {
    if (shutdown_.load(std::memory_order_acquire)) return std::nullopt;
    waiter.wait();
  }
  StateBatch out = std::move(b.storage);
  delivered_.fetch_add(out.size, std::memory_order_relaxed);
  b.free_for_gen.store(generation + ring_blocks(), std::memory_order_release);
  return out;
}

std::optional<StateBatch> StateQueue::wait_ready() {
  if (shutdown_.load(std::memory_order_acquire)) {
    const int64_t front = next_out_.load(std::memory_order_acquire);
    Block& b = blocks_[static_cast<size_t>(front) % blocks_.size()];
    if (b.complete_gen.load(std::memory_order_acquire) < front) return std::nullopt;
  }
  ready_.acquire();
  return take_front();
}

std::optional<StateBatch> StateQueue::wait_ready_for(std::chrono::microseconds timeout) {
  if (!ready_.try_acquire_for(timeout)) return std::nullopt;
  return take_front();
}

void StateQueue::shutdown() {
  if (shutdown_.exchange(true, std::memory_order_acq_rel)) return;
  ready_.release(kWakeBurst);
}

}  // namespace steppool
