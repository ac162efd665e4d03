#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "steppool/env.hpp"

namespace steppool {

enum class BenchMode : int32_t { ForLoop, Sync, Async };

const char* bench_mode_name(BenchMode mode);

// One throughput measurement: drive a workload for `iterations` batches with
// uniformly sampled actions and report frames per second.
//   ForLoop  - step num_envs bare instances serially in the calling thread.
//   Sync     - pool with batch_size == num_envs, driven by step().
//   Async    - pool with batch_size < num_envs, driven by recv()/send().
struct BenchConfig {
  BenchMode mode = BenchMode::Sync;
  std::string task_id = "CartPole";
  int32_t num_envs = 8;
  // Async only; 0 picks max(1, 3*num_envs/4). Sync/ForLoop ignore it.
  int32_t batch_size = 0;
  int32_t num_threads = 1;
  int32_t iterations = 1000;
  int32_t warmup_iterations = 100;
  int32_t frameskip = 1;  // multiplier converting env steps to frames
  int64_t seed = 0;
  bool pin_cores = false;
  int32_t max_episode_steps = 500;
  std::map<std::string, double> env_params;
};

struct BenchResult {
  BenchConfig config;
  double wall_seconds = 0.0;
  int64_t env_steps_total = 0;  // iterations * records per iteration
  int64_t records_received = 0; // actual count, cross-checked against the above
  double fps = 0.0;             // env_steps_total * frameskip / wall_seconds
  double p50_us = 0.0;          // per-iteration latency percentiles
  double p95_us = 0.0;
  double p99_us = 0.0;
  uint64_t actions_checksum = 0;  // hash of the sampled action sequence
};

// Runs one measurement. Warmup iterations are excluded from all timing.
BenchResult bench_run(const BenchConfig& config);

// One bench_run per worker count, with num_envs scaled to 3x workers (and
// the async batch size rescaled proportionally). Throws on an empty list.
std::vector<BenchResult> bench_sweep(const BenchConfig& base,
                                     std::span<const int32_t> workers);

enum class OutputFormat : int32_t { Csv, Json };

// CSV columns: mode,task,num_envs,batch_size,threads,iterations,frameskip,
// wall_seconds,fps,p50_us,p95_us,p99_us. JSON holds the same records as an
// array of objects.
std::string results_to_csv(std::span<const BenchResult> results);
std::string results_to_json(std::span<const BenchResult> results);

// Writes to `path`, or to stdout when path is empty.
void emit_results(std::span<const BenchResult> results, OutputFormat format,
                  const std::string& path);

}  // namespace steppool
