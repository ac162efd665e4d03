#include "steppool/envs/delay.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

namespace steppool {

DelayParams DelayParams::from(const EnvContext& ctx) {
  DelayParams p;
  p.dist = static_cast<Dist>(static_cast<int32_t>(ctx.param("dist", 0.0)));
  p.lo_us = ctx.param("lo", 1000.0);
  p.hi_us = ctx.param("hi", p.lo_us);
  p.mu = ctx.param("mu", 0.0);
  p.sigma = ctx.param("sigma", 1.0);
  p.busy_wait = ctx.param("busy_wait", 1.0) != 0.0;
  p.slow_env_id = static_cast<int32_t>(ctx.param("slow_id", -1.0));
  p.slow_us = ctx.param("slow_us", 20000.0);
  return p;
}

double sample_delay_us(const DelayParams& params, StreamRng& rng) {
  double us = 0.0;
  switch (params.dist) {
    case DelayParams::Dist::Constant:
      us = params.lo_us;
      break;
    case DelayParams::Dist::Uniform:
      us = rng.uniform(params.lo_us, params.hi_us);
      break;
    case DelayParams::Dist::LogNormal:
      us = std::exp(params.mu + params.sigma * rng.normal());
      break;
  }
  return std::max(us, 0.0);
}

EnvSpec DelayEnv::spec(const PoolConfig& /*config*/) {
  EnvSpec spec;
  spec.name = "Delay";
  spec.observation = ObsLayout{{1}, ScalarKind::Float32};
  spec.action = DiscreteSpace{1};
  spec.reward_range = {0.0f, 0.0f};
  return spec;
}

void DelayEnv::wait_once() {
  double us;
  if (params_.slow_env_id >= 0 && env_id() == params_.slow_env_id) {
    us = params_.slow_us;
  } else {
    us = sample_delay_us(params_, rng());
  }
  if (us <= 0.0) return;
  if (params_.busy_wait) {
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::duration<double, std::micro>(us);
    while (std::chrono::steady_clock::now() < deadline) {
    }
  } else {
    std::this_thread::sleep_for(std::chrono::duration<double, std::micro>(us));
  }
}

void DelayEnv::do_reset() {
  wait_once();
  count_ = 0;
}

float DelayEnv::do_step(const ActionPayload& /*action*/) {
  wait_once();
  ++count_;
  return 0.0f;
}

void DelayEnv::write_observation(void* dst) const {
  *static_cast<float*>(dst) = static_cast<float>(count_);
}

}  // namespace steppool
