#include "steppool/envs/cartpole.hpp"

#include <cmath>

namespace steppool {

namespace {

constexpr double kGravity = 9.8;
constexpr double kMassCart = 1.0;
constexpr double kMassPole = 0.1;
constexpr double kMassTotal = kMassCart + kMassPole;
constexpr double kHalfLength = 0.5;  // distance to the pole's center of mass
constexpr double kPoleMassLength = kMassPole * kHalfLength;
constexpr double kForceMag = 10.0;
constexpr double kTau = 0.02;  // seconds per step
constexpr double kXThreshold = 2.4;
constexpr double kThetaThreshold = 0.2095;  // rad

}  // namespace

CartPoleState cartpole_dynamics(const CartPoleState& s, int32_t action) {
  const double force = action == 1 ? kForceMag : -kForceMag;
  const double cos_theta = std::cos(s.theta);
  const double sin_theta = std::sin(s.theta);

  const double temp =
      (force + kPoleMassLength * s.theta_dot * s.theta_dot * sin_theta) / kMassTotal;
  const double theta_acc =
      (kGravity * sin_theta - cos_theta * temp) /
      (kHalfLength * (4.0 / 3.0 - kMassPole * cos_theta * cos_theta / kMassTotal));
  const double x_acc = temp - kPoleMassLength * theta_acc * cos_theta / kMassTotal;

  CartPoleState next;
  next.x = s.x + kTau * s.x_dot;
  next.x_dot = s.x_dot + kTau * x_acc;
  next.theta = s.theta + kTau * s.theta_dot;
  next.theta_dot = s.theta_dot + kTau * theta_acc;
  return next;
}

bool cartpole_terminal(const CartPoleState& s) {
  return s.x < -kXThreshold || s.x > kXThreshold || s.theta < -kThetaThreshold ||
         s.theta > kThetaThreshold;
}

EnvSpec CartPoleEnv::spec(const PoolConfig& /*config*/) {
  EnvSpec spec;
  spec.name = "CartPole";
  spec.observation = ObsLayout{{4}, ScalarKind::Float32};
  spec.action = DiscreteSpace{2};
  spec.reward_range = {0.0f, 1.0f};
  return spec;
}

void CartPoleEnv::do_reset() {
  state_.x = rng().uniform(-0.05, 0.05);
  state_.x_dot = rng().uniform(-0.05, 0.05);
  state_.theta = rng().uniform(-0.05, 0.05);
  state_.theta_dot = rng().uniform(-0.05, 0.05);
}

float CartPoleEnv::do_step(const ActionPayload& action) {
  state_ = cartpole_dynamics(state_, std::get<int32_t>(action));
  return 1.0f;
}

void CartPoleEnv::write_observation(void* dst) const {
  float* obs = static_cast<float*>(dst);
  obs[0] = static_cast<float>(state_.x);
  obs[1] = static_cast<float>(state_.x_dot);
  obs[2] = static_cast<float>(state_.theta);
  obs[3] = static_cast<float>(state_.theta_dot);
}

}  // namespace steppool
