#include "steppool/pool.hpp"

#include <string>
#include <utility>
#include <vector>

namespace steppool {

Pool::Pool(PoolConfig config) : config_(std::move(config)) {
  validate_config(config_);
  spec_ = make_spec(config_);

  std::vector<std::unique_ptr<Environment>> envs;
  envs.reserve(config_.num_envs);
  for (int32_t id = 0; id < config_.num_envs; ++id) {
    envs.push_back(make_env(config_, id));
  }

  actions_ = std::make_unique<ActionQueue>(config_.num_envs);
  states_ = std::make_unique<StateQueue>(config_.batch_size, config_.num_envs,
                                         spec_.observation);
  in_flight_ = std::make_unique<std::atomic<uint8_t>[]>(config_.num_envs);
  for (int32_t id = 0; id < config_.num_envs; ++id) {
    in_flight_[id].store(0, std::memory_order_relaxed);
  }
  executor_ = std::make_unique<Executor>(config_, std::move(envs), *actions_, *states_);
}

Pool::~Pool() { close(); }

void Pool::close() {
  if (closed_.exchange(true, std::memory_order_acq_rel)) return;
  executor_->shutdown();
}

void Pool::check_live() const {
  if (closed_.load(std::memory_order_acquire)) {
    throw ProtocolViolationError("pool is closed");
  }
}

void Pool::async_reset() {
  check_live();
  if (started_.exchange(true, std::memory_order_acq_rel)) {
    throw AlreadyStartedError("async_reset may only be called once");
  }
  std::vector<ActionMsg> msgs(config_.num_envs);
  for (int32_t id = 0; id < config_.num_envs; ++id) {
    msgs[id].env_id = id;
    msgs[id].reset = true;
    in_flight_[id].store(1, std::memory_order_release);
  }
  actions_->enqueue(msgs);
}

void Pool::send(std::span<const ActionPayload> actions,
                std::span<const int32_t> env_ids) {
  check_live();
  if (!started_.load(std::memory_order_acquire)) {
    throw ProtocolViolationError("send before async_reset/reset");
  }
  if (actions.size() != env_ids.size()) {
    throw ActionShapeMismatchError("send: actions and env_ids differ in length");
  }
  for (const int32_t id : env_ids) {
    if (id < 0 || id >= config_.num_envs) {
      throw ProtocolViolationError("send: env_id " + std::to_string(id) +
                                   " outside [0, num_envs)");
    }
  }
  for (const ActionPayload& action : actions) {
    validate_action(spec_, action);
  }

  // Claim the in-flight flags; roll back on the first conflict.
  for (size_t i = 0; i < env_ids.size(); ++i) {
    if (in_flight_[env_ids[i]].exchange(1, std::memory_order_acq_rel)) {
      for (size_t j = 0; j < i; ++j) {
        in_flight_[env_ids[j]].store(0, std::memory_order_release);
      }
      throw ProtocolViolationError("send: env_id " + std::to_string(env_ids[i]) +
                                   " already has an action in flight");
    }
  }

  std::vector<ActionMsg> msgs(env_ids.size());
  for (size_t i = 0; i < env_ids.size(); ++i) {
    msgs[i].env_id = env_ids[i];
    msgs[i].action = actions[i];
  }
  actions_->enqueue(msgs);
}

StateBatch Pool::recv() {
  check_live();
  if (!started_.load(std::memory_order_acquire)) {
    throw ProtocolViolationError("recv before async_reset/reset");
  }
  std::optional<StateBatch> batch = states_->wait_ready();
  if (!batch) {
    if (executor_->failed()) {
      throw PoolFailedError("an environment faulted; the pool is poisoned");
    }
    throw ProtocolViolationError("recv on a shut-down pool");
  }
  for (const int32_t id : batch->env_ids) {
    in_flight_[id].store(0, std::memory_order_release);
  }
  if (config_.order_by_env_id) batch->sort_by_env_id();
  return std::move(*batch);
}

std::optional<StateBatch> Pool::recv_for(std::chrono::microseconds timeout) {
  check_live();
  if (!started_.load(std::memory_order_acquire)) {
    throw ProtocolViolationError("recv before async_reset/reset");
  }
  std::optional<StateBatch> batch = states_->wait_ready_for(timeout);
  if (!batch) {
    if (executor_->failed()) {
      throw PoolFailedError("an environment faulted; the pool is poisoned");
    }
    return std::nullopt;
  }
  for (const int32_t id : batch->env_ids) {
    in_flight_[id].store(0, std::memory_order_release);
  }
  if (config_.order_by_env_id) batch->sort_by_env_id();
  return batch;
}

StateBatch Pool::step(std::span<const ActionPayload> actions,
                      std::span<const int32_t> env_ids) {
  send(actions, env_ids);
  return recv();
}

StateBatch Pool::reset() {
  if (config_.batch_size != config_.num_envs) {
    throw SyncOnlyError("reset requires batch_size == num_envs; use async_reset");
  }
  async_reset();
  StateBatch batch = recv();
  batch.sort_by_env_id();
  return batch;
}

std::unique_ptr<Pool> make(PoolConfig config) {
  return std::make_unique<Pool>(std::move(config));
}

}  // namespace steppool
