#pragma once

#include "steppool/env.hpp"

namespace steppool {

struct MountainCarState {
  double position = 0.0;  // clamped to [-1.2, 0.6]
  double velocity = 0.0;  // clamped to [-0.07, 0.07]
};

// One step of the mountain-car dynamics. action: 0 push left, 1 idle,
// 2 push right. Velocity is zeroed when the car is pressed into the left
// wall while still moving left.
MountainCarState mountain_car_dynamics(const MountainCarState& s, int32_t action);

// Goal reached at position >= 0.5.
bool mountain_car_terminal(const MountainCarState& s);

// Reward -1.0 per step; initial position ~ Uniform(-0.6, -0.4), velocity 0.
class MountainCarEnv final : public Environment {
 public:
  explicit MountainCarEnv(const EnvContext& ctx) : Environment(ctx) { do_reset(); }

  static EnvSpec spec(const PoolConfig& config);

  void write_observation(void* dst) const override;
  const MountainCarState& state() const { return state_; }

 private:
  void do_reset() override;
  float do_step(const ActionPayload& action) override;
  bool is_done() const override { return mountain_car_terminal(state_); }

  MountainCarState state_;
};

}  // namespace steppool
