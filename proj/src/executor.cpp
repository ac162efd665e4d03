#include "steppool/executor.hpp"

#include <cstdio>
#include <system_error>
#include <utility>

#ifdef __linux__
#include <pthread.h>
#include <sched.h>
#endif

namespace steppool {

namespace {

int available_cores() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace

int Executor::core_for_worker(int worker_index, int cores) {
  return cores < 1 ? 0 : worker_index % cores;
}

Executor::Executor(const PoolConfig& config, std::vector<std::unique_ptr<Environment>> envs,
                   ActionQueue& actions, StateQueue& states)
    : envs_(std::move(envs)),
      prev_done_(envs_.size(), 0),
      actions_(actions),
      states_(states),
      pin_cores_(config.pin_cores) {
  workers_.reserve(config.num_threads);
  try {
    for (int i = 0; i < config.num_threads; ++i) {
      workers_.emplace_back(&Executor::worker_loop, this, i);
    }
  } catch (const std::system_error& e) {
    actions_.shutdown();
    for (auto& w : workers_) w.join();
    throw SpawnFailureError(std::string("cannot spawn worker threads: ") + e.what());
  }
}

Executor::~Executor() { shutdown(); }

void Executor::shutdown() {
  if (stopped_.exchange(true, std::memory_order_acq_rel)) return;
  actions_.shutdown();
  for (auto& w : workers_) w.join();
  states_.shutdown();
}

void Executor::worker_loop(int worker_index) {
#ifdef __linux__
  if (pin_cores_) {
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(core_for_worker(worker_index, available_cores()), &set);
    if (pthread_setaffinity_np(pthread_self(), sizeof(set), &set) != 0 &&
        !pin_warned_.exchange(true)) {
      std::fprintf(stderr, "steppool: core pinning unavailable, running unpinned\n");
    }
  }
#endif
  for (;;) {
    std::optional<ActionMsg> msg = actions_.dequeue();
    if (!msg) break;
    if (failed_.load(std::memory_order_relaxed)) continue;  // poisoned: drain only
    try {
      run_one(*msg);
    } catch (...) {
      failed_.store(true, std::memory_order_release);
      states_.shutdown();
    }
  }
}

void Executor::run_one(const ActionMsg& msg) {
  Environment& env = *envs_[msg.env_id];
  StepResult result;
  if (msg.reset || prev_done_[msg.env_id]) {
    result = env.reset();  // terminal env: the action is discarded
  } else {
    result = env.step(msg.action);
  }
  prev_done_[msg.env_id] = result.done ? 1 : 0;

  SlotHandle slot = states_.allocate();
  *slot.env_id = msg.env_id;
  env.write_observation(slot.observation);
  *slot.reward = result.reward;
  *slot.done = result.done ? 1 : 0;
  *slot.truncated = result.truncated ? 1 : 0;
  *slot.elapsed_step = result.elapsed_step;
  states_.mark_written(slot);
}

}  // namespace steppool
