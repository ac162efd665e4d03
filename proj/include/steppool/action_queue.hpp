#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <semaphore>
#include <span>
#include <vector>

#include "steppool/env.hpp"

namespace steppool {

// One routed command: step env_id with the payload, or reset it.
struct ActionMsg {
  int32_t env_id = 0;
  bool reset = false;
  ActionPayload action{};
};

// Bounded multi-producer/multi-consumer ring carrying actions to the workers.
//
// Capacity is fixed at 2 * num_envs. Two monotone atomic counters track the
// enqueue and dequeue positions; counter mod capacity selects the cell. Each
// cell carries a sequence stamp so a consumer never reads a cell before its
// producer finished writing, and a producer never overwrites an unconsumed
// cell after wrap-around. A counting semaphore is the only blocking point:
// dequeue waits on it while the queue is empty.
//
// The pool protocol bounds outstanding messages by num_envs, so enqueue never
// legitimately blocks; exceeding the 2N capacity throws QueueOverflowError.
class ActionQueue {
 public:
  explicit ActionQueue(int64_t num_envs);

  ActionQueue(const ActionQueue&) = delete;
  ActionQueue& operator=(const ActionQueue&) = delete;

  // Publishes all messages; they become dequeuable in the order given
  // relative to each other. Callable from any thread.
  void enqueue(std::span<ActionMsg> msgs);

  // Pops one message, blocking while the queue is empty. Returns nullopt
  // after shutdown() once pending messages have drained.
  std::optional<ActionMsg> dequeue();

  // Idempotent. Wakes all blocked dequeuers; pending messages are still
  // drained before callers start seeing nullopt.
  void shutdown();

  int64_t capacity() const { return static_cast<int64_t>(capacity_); }
  int64_t size_approx() const;

 private:
  struct Cell {
    std::atomic<uint64_t> seq{0};
    ActionMsg msg;
  };

  std::vector<Cell> cells_;
  uint64_t capacity_ = 0;
  std::atomic<uint64_t> head_{0};  // next enqueue position
  std::atomic<uint64_t> tail_{0};  // next dequeue position
  std::counting_semaphore<> items_{0};
  std::atomic<bool> shutdown_{false};
};

}  // namespace steppool
