#include "steppool/envs/mountain_car.hpp"

#include <algorithm>
#include <cmath>

namespace steppool {

namespace {

constexpr double kMinPosition = -1.2;
constexpr double kMaxPosition = 0.6;
constexpr double kMaxSpeed = 0.07;
constexpr double kGoalPosition = 0.5;
constexpr double kForce = 0.001;
constexpr double kGravity = 0.0025;

}  // namespace

MountainCarState mountain_car_dynamics(const MountainCarState& s, int32_t action) {
  MountainCarState next;
  next.velocity = s.velocity + (action - 1) * kForce - kGravity * std::cos(3.0 * s.position);
  next.velocity = std::clamp(next.velocity, -kMaxSpeed, kMaxSpeed);
  next.position = std::clamp(s.position + next.velocity, kMinPosition, kMaxPosition);
  if (next.position <= kMinPosition && next.velocity < 0.0) {
    next.velocity = 0.0;
  }
  return next;
}

bool mountain_car_terminal(const MountainCarState& s) {
  return s.position >= kGoalPosition;
}

EnvSpec MountainCarEnv::spec(const PoolConfig& /*config*/) {
  EnvSpec spec;
  spec.name = "MountainCar";
  spec.observation = ObsLayout{{2}, ScalarKind::Float32};
  spec.action = DiscreteSpace{3};
  spec.reward_range = {-1.0f, -1.0f};
  return spec;
}

void MountainCarEnv::do_reset() {
  state_.position = rng().uniform(-0.6, -0.4);
  state_.velocity = 0.0;
}

float MountainCarEnv::do_step(const ActionPayload& action) {
  state_ = mountain_car_dynamics(state_, std::get<int32_t>(action));
  return -1.0f;
}

void MountainCarEnv::write_observation(void* dst) const {
  float* obs = static_cast<float*>(dst);
  obs[0] = static_cast<float>(state_.position);
  obs[1] = static_cast<float>(state_.velocity);
}

}  // namespace steppool
