#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <optional>
#include <semaphore>
#include <vector>

#include "steppool/env.hpp"

namespace steppool {

// M step results packed as one contiguous array per field. Owns its buffers:
// after delivery it never aliases live queue memory.
struct StateBatch {
  int64_t size = 0;
  ObsLayout obs_layout;
  std::vector<int32_t> env_ids;
  std::vector<float> rewards;
  std::vector<uint8_t> dones;
  std::vector<uint8_t> truncateds;
  std::vector<int32_t> elapsed_steps;
  std::vector<std::byte> observations;  // size * obs_layout.bytes()

  void* obs_row(int64_t row) { return observations.data() + row * obs_layout.bytes(); }
  const void* obs_row(int64_t row) const {
    return observations.data() + row * obs_layout.bytes();
  }
  float* obs_f32(int64_t row) { return static_cast<float*>(obs_row(row)); }
  const float* obs_f32(int64_t row) const {
    return static_cast<const float*>(obs_row(row));
  }
  int32_t* obs_i32(int64_t row) { return static_cast<int32_t*>(obs_row(row)); }

  // Reorders all rows so env_ids is ascending.
  void sort_by_env_id();
};

// Exclusive write access to one record's region in every field buffer.
struct SlotHandle {
  int64_t generation = 0;
  int32_t offset = 0;
  int32_t* env_id = nullptr;
  float* reward = nullptr;
  uint8_t* done = nullptr;
  uint8_t* truncated = nullptr;
  int32_t* elapsed_step = nullptr;
  void* observation = nullptr;
  void* block = nullptr;  // owning descriptor, opaque to callers
};

// Ring of pre-allocated blocks, each holding batch_size record slots.
//
// Workers claim slots first-come-first-serve through a monotone allocation
// counter: counter c lands in generation c / M at offset c mod M. The
// generation's backing buffers are allocated fresh when its first slot is
// claimed, and ownership moves out wholesale when the consumer takes the
// block, so a delivered StateBatch stays valid forever and no per-record
// copying or re-batching ever happens.
//
// A block becomes ready when its atomic write counter reaches M; readiness is
// signalled through a semaphore, the only blocking point. Blocks are
// delivered strictly in generation order, each to exactly one caller.
//
// The ring holds ceil(N/M) + 1 descriptors: at most N records are in flight
// under the pool protocol, spanning at most ceil(N/M) generations, plus one
// descriptor of headroom for a consumer mid-delivery.
class StateQueue {
 public:
  StateQueue(int32_t batch_size, int32_t num_envs, ObsLayout layout);

  StateQueue(const StateQueue&) = delete;
  StateQueue& operator=(const StateQueue&) = delete;

  static int64_t ring_depth_for(int32_t batch_size, int32_t num_envs);

  // Claims the next slot. Throws RingExhaustedError if the descriptor for a
  // new generation is still occupied by an unconsumed batch.
  SlotHandle allocate();

  // Declares the slot fully written. The M-th mark of a generation makes the
  // block ready. Marking a handle twice throws ProtocolViolationError.
  void mark_written(const SlotHandle& handle);

  // Takes the oldest ready block, blocking until one is ready. Returns
  // nullopt after shutdown() once ready blocks have drained; a partially
  // written block is discarded, never delivered.
  std::optional<StateBatch> wait_ready();

  // wait_ready with a deadline; nullopt also means "nothing became ready".
  std::optional<StateBatch> wait_ready_for(std::chrono::microseconds timeout);

  // Idempotent; wakes all waiters.
  void shutdown();

  int64_t ring_blocks() const { return static_cast<int64_t>(blocks_.size()); }
  int64_t batch_size() const { return batch_; }
  // Total records handed out through wait_ready, for accounting cross-checks.
  int64_t delivered_records() const { return delivered_.load(std::memory_order_relaxed); }

 private:
  struct Block {
    std::atomic<int64_t> armed_gen{-1};     // generation whose buffers exist
    std::atomic<int64_t> complete_gen{-1};  // last generation fully written
    std::atomic<int64_t> free_for_gen{0};   // next generation allowed to arm
    std::atomic<int32_t> written{0};
    std::vector<uint8_t> slot_written;  // per-slot double-mark guard
    StateBatch storage;
  };

  void arm_block(Block& b, int64_t generation);
  std::optional<StateBatch> take_front();

  int64_t batch_ = 0;
  ObsLayout layout_;
  std::vector<Block> blocks_;
  std::atomic<int64_t> alloc_{0};     // slot allocation counter
  std::atomic<int64_t> next_out_{0};  // next generation to deliver
  std::counting_semaphore<> ready_{0};
  std::atomic<bool> shutdown_{false};
  std::atomic<int64_t> delivered_{0};
};

}  // namespace steppool
