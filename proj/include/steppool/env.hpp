#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "steppool/errors.hpp"
#include "steppool/rng.hpp"

namespace steppool {

enum class ScalarKind : int32_t { Float32, Int32 };

// Shape and scalar kind of one environment's observation. Both supported
// scalar kinds are 4 bytes wide, which keeps slot arithmetic trivial.
struct ObsLayout {
  std::vector<int64_t> shape;
  ScalarKind kind = ScalarKind::Float32;

  int64_t elements() const {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
  }
  int64_t bytes() const { return elements() * 4; }
};

struct DiscreteSpace {
  int32_t n = 0;
};

struct ContinuousSpace {
  std::vector<int64_t> shape;
  std::vector<float> low;   // one bound per element
  std::vector<float> high;

  int64_t elements() const {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
  }
};

using ActionSpace = std::variant<DiscreteSpace, ContinuousSpace>;

// Static description of a registered task: what its observations and actions
// look like. Fixed for the lifetime of any pool built on it.
struct EnvSpec {
  std::string name;
  ObsLayout observation;
  ActionSpace action;
  std::pair<float, float> reward_range{-1e30f, 1e30f};
};

// Immutable description of a pool: counts, seed, per-task parameters.
struct PoolConfig {
  std::string task_id;
  int32_t num_envs = 1;
  int32_t batch_size = 1;
  int32_t num_threads = 1;
  int64_t seed = 0;
  int32_t max_episode_steps = 500;
  bool pin_cores = false;
  // Sort batches by env_id so row i is env i; valid only when
  // batch_size == num_envs.
  bool order_by_env_id = false;
  std::map<std::string, double> env_params;

  double param(const std::string& key, double fallback) const {
    auto it = env_params.find(key);
    return it == env_params.end() ? fallback : it->second;
  }
};

// A discrete action index or a flat continuous vector.
using ActionPayload = std::variant<int32_t, std::vector<float>>;

// One step's outputs minus the observation, which is written separately
// straight into its destination buffer.
struct StepResult {
  float reward = 0.0f;
  bool done = false;
  bool truncated = false;
  int32_t elapsed_step = 0;
};

// Per-instance construction context handed to environment factories.
struct EnvContext {
  int32_t env_id = 0;
  int64_t seed = 0;
  int32_t max_episode_steps = 500;
  std::map<std::string, double> params;

  double param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

// Base class for all environments.
//
// Implementors provide do_reset / do_step / is_done and observation writing;
// the base keeps the episode accounting: elapsed_step counts steps since the
// last reset, and an episode ends either because is_done() reports a terminal
// state or because elapsed_step reached max_episode_steps (reported through
// the separate `truncated` flag, with `done` also set).
//
// Instances are single-threaded objects. The executor guarantees that at most
// one worker touches an instance at any time; environments never lock.
class Environment {
 public:
  virtual ~Environment() = default;

  StepResult reset() {
    do_reset();
    elapsed_ = 0;
    return StepResult{0.0f, false, false, 0};
  }

  StepResult step(const ActionPayload& action) {
    const float reward = do_step(action);
    ++elapsed_;
    const bool truncated = elapsed_ >= max_steps_;
    const bool done = is_done() || truncated;
    return StepResult{reward, done, truncated, elapsed_};
  }

  // Writes exactly observation_layout bytes into dst.
  virtual void write_observation(void* dst) const = 0;

  int32_t elapsed_step() const { return elapsed_; }

 protected:
  explicit Environment(const EnvContext& ctx)
      : rng_(static_cast<uint64_t>(ctx.seed), static_cast<uint64_t>(ctx.env_id)),
        env_id_(ctx.env_id),
        max_steps_(ctx.max_episode_steps) {}

  virtual void do_reset() = 0;
  virtual float do_step(const ActionPayload& action) = 0;
  virtual bool is_done() const = 0;

  StreamRng& rng() { return rng_; }
  int32_t env_id() const { return env_id_; }

 private:
  StreamRng rng_;
  int32_t env_id_ = 0;
  int32_t max_steps_ = 500;
  int32_t elapsed_ = 0;
};

using SpecFactory = std::function<EnvSpec(const PoolConfig&)>;
using EnvFactory = std::function<std::unique_ptr<Environment>(const EnvContext&)>;

// Task registry: maps a task name to its spec and instance factories.
// Built-in tasks ("CartPole", "MountainCar", "Delay") are registered on first
// use; additional tasks may be registered at any time before pools use them.
void register_task(const std::string& task_id, SpecFactory spec_factory,
                   EnvFactory env_factory);
bool is_task_registered(const std::string& task_id);
std::vector<std::string> registered_tasks();

// Throws UnknownTaskError / InvalidConfigError.
void validate_config(const PoolConfig& config);

// Returns the spec published by the task's registration; creates no instances.
EnvSpec make_spec(const PoolConfig& config);

std::unique_ptr<Environment> make_env(const PoolConfig& config, int32_t env_id);

// Throws ActionOutOfRangeError / ActionShapeMismatchError.
void validate_action(const EnvSpec& spec, const ActionPayload& action);

}  // namespace steppool
