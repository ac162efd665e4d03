// Throughput benchmark CLI.
//
//   bench --mode {forloop|sync|async} --task NAME --num-envs N --batch-size M
//         --threads T --iterations K --warmup W --frameskip F --seed S
//         [--pin-cores] [--dist {const|uniform|lognormal} --lo US --hi US
//          --mu MU --sigma SIGMA --busy-wait {0|1} --slow-id ID --slow-us US]
//         [--out FILE] [--format {csv|json}] [--config FILE]
//
//   bench sweep --workers 1,2,4,8 ...   one run per worker count, num_envs
//                                       scaled to 3x workers
//
// --config reads the same options from a plain-text key=value file.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "steppool/bench.hpp"

namespace {

struct CliOptions {
  std::string mode = "sync";
  std::string task = "CartPole";
  int32_t num_envs = 8;
  int32_t batch_size = 0;
  int32_t threads = 1;
  int32_t iterations = 1000;
  int32_t warmup = 100;
  int32_t frameskip = 1;
  int64_t seed = 0;
  bool pin_cores = false;
  int32_t max_episode_steps = 500;

  std::string dist = "const";
  double lo = 1000.0;
  double hi = 1000.0;
  double mu = 0.0;
  double sigma = 1.0;
  int32_t busy_wait = 1;
  int32_t slow_id = -1;
  double slow_us = 20000.0;

  std::string out;
  std::string format = "csv";
  std::vector<int32_t> workers;
};

steppool::BenchConfig to_bench_config(const CliOptions& o) {
  steppool::BenchConfig cfg;
  if (o.mode == "forloop") {
    cfg.mode = steppool::BenchMode::ForLoop;
  } else if (o.mode == "sync") {
    cfg.mode = steppool::BenchMode::Sync;
  } else {
    cfg.mode = steppool::BenchMode::Async;
  }
  cfg.task_id = o.task;
  cfg.num_envs = o.num_envs;
  cfg.batch_size = o.batch_size;
  cfg.num_threads = o.threads;
  cfg.iterations = o.iterations;
  cfg.warmup_iterations = o.warmup;
  cfg.frameskip = o.frameskip;
  cfg.seed = o.seed;
  cfg.pin_cores = o.pin_cores;
  cfg.max_episode_steps = o.max_episode_steps;
  if (o.task == "Delay") {
    double dist = 0.0;
    if (o.dist == "uniform") dist = 1.0;
    if (o.dist == "lognormal") dist = 2.0;
    cfg.env_params = {{"dist", dist},         {"lo", o.lo},
                      {"hi", o.hi},           {"mu", o.mu},
                      {"sigma", o.sigma},     {"busy_wait", double(o.busy_wait)},
                      {"slow_id", double(o.slow_id)}, {"slow_us", o.slow_us}};
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parallel environment throughput benchmark"};
  app.fallthrough();
  CliOptions o;

  app.add_option("--mode", o.mode)->check(CLI::IsMember({"forloop", "sync", "async"}));
  app.add_option("--task", o.task);
  app.add_option("--num-envs", o.num_envs)->check(CLI::PositiveNumber);
  app.add_option("--batch-size", o.batch_size);
  app.add_option("--threads", o.threads)->check(CLI::PositiveNumber);
  app.add_option("--iterations", o.iterations)->check(CLI::PositiveNumber);
  app.add_option("--warmup", o.warmup)->check(CLI::NonNegativeNumber);
  app.add_option("--frameskip", o.frameskip)->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed);
  app.add_flag("--pin-cores", o.pin_cores);
  app.add_option("--max-episode-steps", o.max_episode_steps)->check(CLI::PositiveNumber);

  app.add_option("--dist", o.dist)->check(CLI::IsMember({"const", "uniform", "lognormal"}));
  app.add_option("--lo", o.lo);
  app.add_option("--hi", o.hi);
  app.add_option("--mu", o.mu);
  app.add_option("--sigma", o.sigma);
  app.add_option("--busy-wait", o.busy_wait)->check(CLI::Range(0, 1));
  app.add_option("--slow-id", o.slow_id);
  app.add_option("--slow-us", o.slow_us);

  app.add_option("--out", o.out);
  app.add_option("--format", o.format)->check(CLI::IsMember({"csv", "json"}));
  app.set_config("--config");

  CLI::App* sweep = app.add_subcommand("sweep", "run once per worker count");
  sweep->add_option("--workers", o.workers, "comma-separated worker counts")
      ->required()
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    const steppool::BenchConfig base = to_bench_config(o);
    std::vector<steppool::BenchResult> results;
    if (sweep->parsed()) {
      results = steppool::bench_sweep(base, o.workers);
    } else {
      results.push_back(steppool::bench_run(base));
    }
    for (const auto& r : results) {
      std::fprintf(stderr, "%s %s envs=%d batch=%d threads=%d: %.0f fps (p50 %.0f us)\n",
                   steppool::bench_mode_name(r.config.mode), r.config.task_id.c_str(),
                   r.config.num_envs, r.config.batch_size, r.config.num_threads, r.fps,
                   r.p50_us);
    }
    const auto format = o.format == "json" ? steppool::OutputFormat::Json
                                           : steppool::OutputFormat::Csv;
    steppool::emit_results(results, format, o.out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
