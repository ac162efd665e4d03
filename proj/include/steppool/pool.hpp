#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>

#include "steppool/action_queue.hpp"
#include "steppool/env.hpp"
#include "steppool/executor.hpp"
#include "steppool/state_queue.hpp"

namespace steppool {

// The user-facing pool of num_envs environment instances.
//
// Two driving styles share one object:
//   - low level: async_reset() once, then recv()/send() in a loop. recv
//     returns the first batch_size completed envs; send publishes actions for
//     exactly the env_ids a previous recv returned.
//   - synchronous facade (batch_size == num_envs): reset() then step(),
//     which is send followed by recv.
//
// The client-side rule is one in-flight action per env: an env_id may be sent
// only after recv returned it and before it is sent again. send and recv are
// each safe to call from any thread, so one thread may feed actions while
// another drains batches.
class Pool {
 public:
  explicit Pool(PoolConfig config);
  ~Pool();

  Pool(const Pool&) = delete;
  Pool& operator=(const Pool&) = delete;

  const PoolConfig& config() const { return config_; }
  const EnvSpec& spec() const { return spec_; }
  const ObsLayout& observation_layout() const { return spec_.observation; }
  const ActionSpace& action_space() const { return spec_.action; }

  // Enqueues a reset for every env. Callable exactly once, before anything
  // else; the initial observations arrive through subsequent recv calls.
  void async_reset();

  // Publishes one action per env_id and returns without waiting for any
  // environment execution.
  void send(std::span<const ActionPayload> actions, std::span<const int32_t> env_ids);

  // Blocks for the next batch of exactly batch_size records with distinct
  // env_ids, and marks those envs sendable again. A terminal record carries
  // done=true and the final reward; the new episode's first observation
  // arrives in response to the env's next send.
  StateBatch recv();

  // Test support: recv with a deadline instead of blocking indefinitely.
  std::optional<StateBatch> recv_for(std::chrono::microseconds timeout);

  // send followed by recv. With batch_size == num_envs this is the classic
  // synchronous step over all envs.
  StateBatch step(std::span<const ActionPayload> actions,
                  std::span<const int32_t> env_ids);

  // Synchronous-only: async_reset + recv, rows sorted by env_id ascending.
  StateBatch reset();

  // Stops the workers and joins them; in-flight steps finish first.
  // Idempotent; also runs on destruction.
  void close();

  // Records delivered so far, for throughput accounting cross-checks.
  int64_t total_received() const { return states_->delivered_records(); }

 private:
  void check_live() const;

  PoolConfig config_;
  EnvSpec spec_;
  std::unique_ptr<ActionQueue> actions_;
  std::unique_ptr<StateQueue> states_;
  std::unique_ptr<Executor> executor_;
  std::unique_ptr<std::atomic<uint8_t>[]> in_flight_;
  std::atomic<bool> started_{false};
  std::atomic<bool> closed_{false};
};

// Builds a pool for a registered task; validates the config first.
std::unique_ptr<Pool> make(PoolConfig config);

}  // namespace steppool
