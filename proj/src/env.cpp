#include "steppool/env.hpp"

#include <mutex>
#include <unordered_map>

#include "steppool/envs/cartpole.hpp"
#include "steppool/envs/delay.hpp"
#include "steppool/envs/mountain_car.hpp"

namespace steppool {

namespace {

struct TaskEntry {
  SpecFactory spec;
  EnvFactory env;
};

struct Registry {
  std::mutex mu;
  std::unordered_map<std::string, TaskEntry> tasks;
};

Registry& registry() {
  static Registry r;
  return r;
}

template <typename E>
EnvFactory factory_for() {
  return [](const EnvContext& ctx) -> std::unique_ptr<Environment> {
    return std::make_unique<E>(ctx);
  };
}

void ensure_builtins() {
  static std::once_flag once;
  std::call_once(once, [] {
    register_task("CartPole", &CartPoleEnv::spec, factory_for<CartPoleEnv>());
    register_task("MountainCar", &MountainCarEnv::spec, factory_for<MountainCarEnv>());
    register_task("Delay", &DelayEnv::spec, factory_for<DelayEnv>());
  });
}

}  // namespace

void register_task(const std::string& task_id, SpecFactory spec_factory,
                   EnvFactory env_factory) {
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  r.tasks[task_id] = TaskEntry{std::move(spec_factory), std::move(env_factory)};
}

bool is_task_registered(const std::string& task_id) {
  ensure_builtins();
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  return r.tasks.count(task_id) != 0;
}

std::vector<std::string> registered_tasks() {
  ensure_builtins();
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  std::vector<std::string> names;
  names.reserve(r.tasks.size());
  for (const auto& [name, entry] : r.tasks) names.push_back(name);
  return names;
}

namespace {

TaskEntry lookup(const std::string& task_id) {
  ensure_builtins();
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  auto it = r.tasks.find(task_id);
  if (it == r.tasks.end()) {
    throw UnknownTaskError("unknown task: \"" + task_id + "\"");
  }
  return it->second;
}

}  // namespace

void validate_config(const PoolConfig& config) {
  if (config.num_envs < 1) {
    throw InvalidConfigError("num_envs must be positive");
  }
  if (config.batch_size < 1) {
    throw InvalidConfigError("batch_size must be positive");
  }
  if (config.batch_size > config.num_envs) {
    throw InvalidConfigError("batch_size cannot be greater than num_envs");
  }
  if (config.num_threads < 1) {
    throw InvalidConfigError("num_threads must be positive");
  }
  if (config.max_episode_steps < 1) {
    throw InvalidConfigError("max_episode_steps must be positive");
  }
  if (config.order_by_env_id && config.batch_size != config.num_envs) {
    throw InvalidConfigError("order_by_env_id requires batch_size == num_envs");
  }
  lookup(config.task_id);  // throws UnknownTaskError
}

EnvSpec make_spec(const PoolConfig& config) {
  validate_config(config);
  return lookup(config.task_id).spec(config);
}

std::unique_ptr<Environment> make_env(const PoolConfig& config, int32_t env_id) {
  EnvContext ctx;
  ctx.env_id = env_id;
  ctx.seed = config.seed;
  ctx.max_episode_steps = config.max_episode_steps;
  ctx.params = config.env_params;
  return lookup(config.task_id).env(ctx);
}

void validate_action(const EnvSpec& spec, const ActionPayload& action) {
  if (const auto* discrete = std::get_if<DiscreteSpace>(&spec.action)) {
    const auto* value = std::get_if<int32_t>(&action);
    if (value == nullptr) {
      throw ActionShapeMismatchError(spec.name + ": expected a discrete action");
    }
    if (*value < 0 || *value >= discrete->n) {
      throw ActionOutOfRangeError(spec.name + ": action " + std::to_string(*value) +
                                  " outside [0, " + std::to_string(discrete->n) + ")");
    }
    return;
  }
  const auto& box = std::get<ContinuousSpace>(spec.action);
  const auto* values = std::get_if<std::vector<float>>(&action);
  if (values == nullptr) {
    throw ActionShapeMismatchError(spec.name + ": expected a continuous action");
  }
  if (static_cast<int64_t>(values->size()) != box.elements()) {
    throw ActionShapeMismatchError(spec.name + ": action has " +
                                   std::to_string(values->size()) + " elements, spec has " +
                                   std::to_string(box.elements()));
  }
  for (size_t i = 0; i < values->size(); ++i) {
    if ((*values)[i] < box.low[i] || (*values)[i] > box.high[i]) {
      throw ActionOutOfRangeError(spec.name + ": element " + std::to_string(i) +
                                  " outside its bounds");
    }
  }
}

}  // namespace steppool
