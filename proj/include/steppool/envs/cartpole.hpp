#pragma once

#include "steppool/env.hpp"

namespace steppool {

struct CartPoleState {
  double x = 0.0;          // cart position (m)
  double x_dot = 0.0;      // cart velocity (m/s)
  double theta = 0.0;      // pole angle (rad), 0 = upright
  double theta_dot = 0.0;  // pole angular velocity (rad/s)
};

// One explicit Euler step of the cart-pole dynamics (force +-10 N, tau 0.02 s,
// g 9.8, cart 1.0 kg, pole 0.1 kg, half-length 0.5 m). Positions integrate
// with the pre-step velocities. action: 0 pushes left, 1 pushes right.
CartPoleState cartpole_dynamics(const CartPoleState& s, int32_t action);

// Episode ends when |x| > 2.4 m or |theta| > 0.2095 rad.
bool cartpole_terminal(const CartPoleState& s);

// Reward 1.0 per step; initial state components ~ Uniform(-0.05, 0.05).
class CartPoleEnv final : public Environment {
 public:
  explicit CartPoleEnv(const EnvContext& ctx) : Environment(ctx) { do_reset(); }

  static EnvSpec spec(const PoolConfig& config);

  void write_observation(void* dst) const override;
  const CartPoleState& state() const { return state_; }

 private:
  void do_reset() override;
  float do_step(const ActionPayload& action) override;
  bool is_done() const override { return cartpole_terminal(state_); }

  CartPoleState state_;
};

}  // namespace steppool
