#pragma once

#include "steppool/env.hpp"

namespace steppool {

// Synthetic workload: each reset/step waits a sampled duration and returns
// the step counter as its observation. Used to emulate environments with
// configurable execution-time distributions, including deliberate stragglers.
struct DelayParams {
  enum class Dist : int32_t { Constant = 0, Uniform = 1, LogNormal = 2 };

  Dist dist = Dist::Constant;
  double lo_us = 1000.0;  // Constant duration, or lower bound for Uniform
  double hi_us = 1000.0;  // upper bound for Uniform
  double mu = 0.0;        // LogNormal: mean of ln(duration_us)
  double sigma = 1.0;     // LogNormal: stddev of ln(duration_us)
  bool busy_wait = true;  // spin on the clock instead of sleeping

  // One env may be singled out as a constant-duration straggler.
  int32_t slow_env_id = -1;
  double slow_us = 20000.0;

  // Reads keys dist, lo, hi, mu, sigma, busy_wait, slow_id, slow_us.
  static DelayParams from(const EnvContext& ctx);
};

// Deterministic per-env duration stream: a pure function of the rng state.
// Sampled durations are clamped to >= 0.
double sample_delay_us(const DelayParams& params, StreamRng& rng);

class DelayEnv final : public Environment {
 public:
  explicit DelayEnv(const EnvContext& ctx)
      : Environment(ctx), params_(DelayParams::from(ctx)) {}

  static EnvSpec spec(const PoolConfig& config);

  void write_observation(void* dst) const override;
  const DelayParams& params() const { return params_; }

 private:
  void do_reset() override;
  float do_step(const ActionPayload& action) override;
  bool is_done() const override { return false; }  // truncation only

  void wait_once();

  DelayParams params_;
  int32_t count_ = 0;
};

}  // namespace steppool
