#include "steppool/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "steppool/pool.hpp"

namespace steppool {

namespace {

using Clock = std::chrono::steady_clock;

struct ActionSampler {
  explicit ActionSampler(const EnvSpec& spec, int64_t seed)
      : spec_(spec), rng_(static_cast<uint64_t>(seed), 0x9e3779b9ull) {}

  ActionPayload sample() {
    if (const auto* discrete = std::get_if<DiscreteSpace>(&spec_.action)) {
      const int32_t a = rng_.uniform_int(discrete->n);
      feed(static_cast<uint64_t>(a));
      return a;
    }
    const auto& box = std::get<ContinuousSpace>(spec_.action);
    std::vector<float> values(box.elements());
    for (size_t i = 0; i < values.size(); ++i) {
      values[i] = static_cast<float>(rng_.uniform(box.low[i], box.high[i]));
      uint32_t bits;
      std::memcpy(&bits, &values[i], sizeof(bits));
      feed(bits);
    }
    return values;
  }

  uint64_t checksum() const { return checksum_; }

 private:
  void feed(uint64_t v) {
    checksum_ ^= v;
    checksum_ *= 0x100000001B3ull;  // FNV-1a step
  }

  const EnvSpec& spec_;
  StreamRng rng_;
  uint64_t checksum_ = 0x811C9DC5ull;
};

double percentile(std::vector<double> sorted_copy, double q) {
  std::sort(sorted_copy.begin(), sorted_copy.end());
  const size_t n = sorted_copy.size();
  if (n == 0) return 0.0;
  const size_t rank = static_cast<size_t>(std::ceil(q / 100.0 * n));
  return sorted_copy[std::min(rank == 0 ? 0 : rank - 1, n - 1)];
}

PoolConfig pool_config_from(const BenchConfig& cfg, int32_t batch_size) {
  PoolConfig pc;
  pc.task_id = cfg.task_id;
  pc.num_envs = cfg.num_envs;
  pc.batch_size = batch_size;
  pc.num_threads = cfg.num_threads;
  pc.seed = cfg.seed;
  pc.max_episode_steps = cfg.max_episode_steps;
  pc.pin_cores = cfg.pin_cores;
  pc.env_params = cfg.env_params;
  return pc;
}

int32_t resolved_batch_size(const BenchConfig& cfg) {
  switch (cfg.mode) {
    case BenchMode::ForLoop:
    case BenchMode::Sync:
      return cfg.num_envs;
    case BenchMode::Async:
      if (cfg.batch_size > 0) return cfg.batch_size;
      return std::max<int32_t>(1, 3 * cfg.num_envs / 4);
  }
  return cfg.num_envs;
}

BenchResult finish(const BenchConfig& cfg, double wall_seconds, int64_t steps,
                   int64_t received, std::vector<double> latencies_us,
                   uint64_t checksum) {
  BenchResult r;
  r.config = cfg;
  r.config.batch_size = resolved_batch_size(cfg);
  r.wall_seconds = wall_seconds;
  r.env_steps_total = steps;
  r.records_received = received;
  r.fps = wall_seconds > 0.0
              ? static_cast<double>(steps) * cfg.frameskip / wall_seconds
              : 0.0;
  r.p50_us = percentile(latencies_us, 50.0);
  r.p95_us = percentile(latencies_us, 95.0);
  r.p99_us = percentile(latencies_us, 99.0);
  r.actions_checksum = checksum;
  return r;
}

BenchResult run_forloop(const BenchConfig& cfg) {
  const PoolConfig pc = pool_config_from(cfg, cfg.num_envs);
  const EnvSpec spec = make_spec(pc);
  const int32_t n = cfg.num_envs;

  std::vector<std::unique_ptr<Environment>> envs;
  envs.reserve(n);
  for (int32_t id = 0; id < n; ++id) envs.push_back(make_env(pc, id));
  std::vector<uint8_t> prev_done(n, 0);
  for (auto& env : envs) env->reset();

  // Sink arrays stand in for the batches a vectorized consumer would read.
  std::vector<std::byte> obs(static_cast<size_t>(n) * spec.observation.bytes());
  std::vector<float> rewards(n);
  std::vector<uint8_t> dones(n);

  ActionSampler sampler(spec, cfg.seed);
  auto sweep = [&] {
    for (int32_t e = 0; e < n; ++e) {
      const ActionPayload action = sampler.sample();
      StepResult res;
      if (prev_done[e]) {
        res = envs[e]->reset();  // mirror the pool's auto-reset rule
      } else {
        res = envs[e]->step(action);
      }
      prev_done[e] = res.done ? 1 : 0;
      envs[e]->write_observation(obs.data() + e * spec.observation.bytes());
      rewards[e] = res.reward;
      dones[e] = res.done ? 1 : 0;
    }
  };

  for (int32_t i = 0; i < cfg.warmup_iterations; ++i) sweep();

  std::vector<double> latencies;
  latencies.reserve(cfg.iterations);
  const auto t0 = Clock::now();
  for (int32_t i = 0; i < cfg.iterations; ++i) {
    const auto it0 = Clock::now();
    sweep();
    latencies.push_back(
        std::chrono::duration<double, std::micro>(Clock::now() - it0).count());
  }
  const double wall = std::chrono::duration<double>(Clock::now() - t0).count();

  const int64_t steps = static_cast<int64_t>(cfg.iterations) * n;
  return finish(cfg, wall, steps, steps, std::move(latencies), sampler.checksum());
}

BenchResult run_pool(const BenchConfig& cfg) {
  const int32_t batch = resolved_batch_size(cfg);
  auto pool = make(pool_config_from(cfg, batch));
  const EnvSpec& spec = pool->spec();
  ActionSampler sampler(spec, cfg.seed);

  pool->async_reset();
  StateBatch state = pool->recv();

  std::vector<ActionPayload> actions;
  std::vector<int32_t> ids;
  auto cycle = [&] {
    actions.clear();
    ids.clear();
    for (const int32_t id : state.env_ids) {
      ids.push_back(id);
      actions.push_back(sampler.sample());
    }
    pool->send(actions, ids);
    state = pool->recv();
  };

  for (int32_t i = 0; i < cfg.warmup_iterations; ++i) cycle();

  std::vector<double> latencies;
  latencies.reserve(cfg.iterations);
  int64_t received = 0;
  const auto t0 = Clock::now();
  for (int32_t i = 0; i < cfg.iterations; ++i) {
    const auto it0 = Clock::now();
    cycle();
    latencies.push_back(
        std::chrono::duration<double, std::micro>(Clock::now() - it0).count());
    received += state.size;
  }
  const double wall = std::chrono::duration<double>(Clock::now() - t0).count();

  const int64_t steps = static_cast<int64_t>(cfg.iterations) *
                        (cfg.mode == BenchMode::Sync ? cfg.num_envs : batch);
  return finish(cfg, wall, steps, received, std::move(latencies), sampler.checksum());
}

}  // namespace

const char* bench_mode_name(BenchMode mode) {
  switch (mode) {
    case BenchMode::ForLoop: return "forloop";
    case BenchMode::Sync: return "sync";
    case BenchMode::Async: return "async";
  }
  return "?";
}

BenchResult bench_run(const BenchConfig& config) {
  if (config.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (config.warmup_iterations < 0) throw std::invalid_argument("warmup must be >= 0");
  if (config.frameskip < 1) throw std::invalid_argument("frameskip must be >= 1");
  if (config.mode == BenchMode::ForLoop) return run_forloop(config);
  return run_pool(config);
}

std::vector<BenchResult> bench_sweep(const BenchConfig& base,
                                     std::span<const int32_t> workers) {
  if (workers.empty()) {
    throw std::invalid_argument("bench sweep needs at least one worker count");
  }
  const int32_t base_batch = resolved_batch_size(base);
  std::vector<BenchResult> results;
  results.reserve(workers.size());
  for (const int32_t w : workers) {
    if (w < 1) throw std::invalid_argument("worker counts must be >= 1");
    BenchConfig cfg = base;
    cfg.num_threads = w;
    cfg.num_envs = 3 * w;  // keep the workers loaded while batches are consumed
    if (cfg.mode == BenchMode::Async) {
      cfg.batch_size = std::max<int32_t>(
          1, static_cast<int32_t>(static_cast<int64_t>(cfg.num_envs) * base_batch /
                                  base.num_envs));
    } else {
      cfg.batch_size = cfg.num_envs;
    }
    results.push_back(bench_run(cfg));
  }
  return results;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string results_to_csv(std::span<const BenchResult> results) {
  std::string out =
      "mode,task,num_envs,batch_size,threads,iterations,frameskip,"
      "wall_seconds,fps,p50_us,p95_us,p99_us\n";
  for (const BenchResult& r : results) {
    const BenchConfig& c = r.config;
    out += bench_mode_name(c.mode);
    out += ',';
    out += c.task_id;
    out += ',';
    out += std::to_string(c.num_envs) + ',' + std::to_string(c.batch_size) + ',' +
           std::to_string(c.num_threads) + ',' + std::to_string(c.iterations) + ',' +
           std::to_string(c.frameskip) + ',';
    out += format_double(r.wall_seconds) + ',' + format_double(r.fps) + ',' +
           format_double(r.p50_us) + ',' + format_double(r.p95_us) + ',' +
           format_double(r.p99_us) + '\n';
  }
  return out;
}

std::string results_to_json(std::span<const BenchResult> results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const BenchResult& r : results) {
    const BenchConfig& c = r.config;
    arr.push_back({{"mode", bench_mode_name(c.mode)},
                   {"task", c.task_id},
                   {"num_envs", c.num_envs},
                   {"batch_size", c.batch_size},
                   {"threads", c.num_threads},
                   {"iterations", c.iterations},
                   {"frameskip", c.frameskip},
                   {"wall_seconds", r.wall_seconds},
                   {"fps", r.fps},
                   {"p50_us", r.p50_us},
                   {"p95_us", r.p95_us},
                   {"p99_us", r.p99_us}});
  }
  return arr.dump(2) + "\n";
}

void emit_results(std::span<const BenchResult> results, OutputFormat format,
                  const std::string& path) {
  if (results.empty()) throw std::invalid_argument("no results to emit");
  const std::string text =
      format == OutputFormat::Csv ? results_to_csv(results) : results_to_json(results);
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << text;
  if (!out.good()) throw std::runtime_error("write failed: " + path);
}

}  // namespace steppool
