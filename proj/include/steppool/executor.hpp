#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <thread>
#include <vector>

#include "steppool/action_queue.hpp"
#include "steppool/env.hpp"
#include "steppool/state_queue.hpp"

namespace steppool {

// Fixed set of worker threads, each looping: dequeue a message, run the
// addressed environment, claim a state slot, write the record, mark it.
//
// Auto-reset happens here: when an env's previous record reported done, the
// next message addressed to it is executed as a reset and its action payload
// is discarded. The per-env done table is plain memory; the one-in-flight
// protocol means each entry is only ever touched between the queue
// synchronization points by whichever worker holds that env's message.
//
// An exception escaping an environment poisons the pool: the state queue is
// shut down so the consumer observes the failure promptly.
class Executor {
 public:
  Executor(const PoolConfig& config, std::vector<std::unique_ptr<Environment>> envs,
           ActionQueue& actions, StateQueue& states);
  ~Executor();

  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  // Stops accepting work, joins all workers (in-flight steps finish and are
  // written first), then shuts the state queue. Idempotent.
  void shutdown();

  bool failed() const { return failed_.load(std::memory_order_acquire); }
  int num_workers() const { return static_cast<int>(workers_.size()); }

  // Worker i runs on core i mod available_cores when pinning is requested.
  static int core_for_worker(int worker_index, int available_cores);

 private:
  void worker_loop(int worker_index);
  void run_one(const ActionMsg& msg);

  std::vector<std::unique_ptr<Environment>> envs_;
  std::vector<uint8_t> prev_done_;  // worker-exclusive via one-in-flight protocol
  ActionQueue& actions_;
  StateQueue& states_;
  std::vector<std::thread> workers_;
  std::atomic<bool> failed_{false};
  std::atomic<bool> stopped_{false};
  std::atomic<bool> pin_warned_{false};
  bool pin_cores_ = false;
};

}  // namespace steppool
