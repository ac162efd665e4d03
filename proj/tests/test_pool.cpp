#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

#include "steppool/pool.hpp"

using namespace steppool;
using namespace std::chrono_literals;

namespace {

using Clock = std::chrono::steady_clock;

PoolConfig cartpole_config(int32_t n, int32_t m, int32_t threads, int64_t seed = 7) {
  PoolConfig cfg;
  cfg.task_id = "CartPole";
  cfg.num_envs = n;
  cfg.batch_size = m;
  cfg.num_threads = threads;
  cfg.seed = seed;
  return cfg;
}

PoolConfig delay_config(int32_t n, int32_t m, int32_t threads, double lo_us,
                        bool busy_wait = false) {
  PoolConfig cfg;
  cfg.task_id = "Delay";
  cfg.num_envs = n;
  cfg.batch_size = m;
  cfg.num_threads = threads;
  cfg.env_params = {{"lo", lo_us}, {"busy_wait", busy_wait ? 1.0 : 0.0}};
  return cfg;
}

std::vector<ActionPayload> zeros(size_t n) {
  return std::vector<ActionPayload>(n, ActionPayload{int32_t{0}});
}

std::vector<ActionPayload> actions_for(const std::vector<int32_t>& ids, int32_t t,
                                       int32_t n_actions = 2) {
  std::vector<ActionPayload> acts;
  acts.reserve(ids.size());
  for (int32_t id : ids) acts.push_back(ActionPayload{(id + t) % n_actions});
  return acts;
}

bool batches_equal(const StateBatch& a, const StateBatch& b) {
  return a.size == b.size && a.env_ids == b.env_ids && a.rewards == b.rewards &&
         a.dones == b.dones && a.truncateds == b.truncateds &&
         a.elapsed_steps == b.elapsed_steps &&
         a.observations.size() == b.observations.size() &&
         std::memcmp(a.observations.data(), b.observations.data(),
                     a.observations.size()) == 0;
}

}  // namespace

TEST_CASE("make: sync and async pools construct; unknown task is rejected") {
  CHECK_NOTHROW(make(cartpole_config(10, 9, 4)));
  PoolConfig bad = cartpole_config(4, 4, 1);
  bad.task_id = "NoSuchEnv";
  CHECK_THROWS_AS(make(bad), UnknownTaskError);
  bad = cartpole_config(4, 5, 1);
  CHECK_THROWS_AS(make(bad), InvalidConfigError);

  // The classic wide synchronous configuration: one step drives all 100 envs.
  auto pool = make(cartpole_config(100, 100, 8));
  pool->reset();
  std::vector<int32_t> everyone(100);
  for (int32_t e = 0; e < 100; ++e) everyone[e] = e;
  StateBatch batch = pool->step(zeros(100), everyone);
  CHECK(batch.size == 100);
  std::vector<int32_t> ids(batch.env_ids);
  std::sort(ids.begin(), ids.end());
  CHECK(ids == everyone);
  CHECK(batch.observations.size() ==
        static_cast<size_t>(batch.size) * pool->observation_layout().bytes());
}

TEST_CASE("specs: pool accessors expose the registered layouts") {
  auto pool = make(cartpole_config(2, 2, 1));
  CHECK(pool->observation_layout().shape == std::vector<int64_t>{4});
  CHECK(std::get<DiscreteSpace>(pool->action_space()).n == 2);

  PoolConfig mc = cartpole_config(2, 2, 1);
  mc.task_id = "MountainCar";
  auto mc_pool = make(mc);
  CHECK(mc_pool->observation_layout().shape == std::vector<int64_t>{2});
  CHECK(std::get<DiscreteSpace>(mc_pool->action_space()).n == 3);

  auto delay_pool = make(delay_config(2, 2, 1, 0.0));
  CHECK(delay_pool->observation_layout().shape == std::vector<int64_t>{1});
  CHECK(std::get<DiscreteSpace>(delay_pool->action_space()).n == 1);
}

TEST_CASE("async_reset: every env delivers one initial record") {
  auto pool = make(cartpole_config(10, 5, 4));
  pool->async_reset();
  CHECK_THROWS_AS(pool->async_reset(), AlreadyStartedError);

  std::set<int32_t> ids;
  for (int r = 0; r < 2; ++r) {
    StateBatch batch = pool->recv();
    CHECK(batch.size == 5);
    for (int64_t i = 0; i < batch.size; ++i) {
      ids.insert(batch.env_ids[i]);
      CHECK(batch.dones[i] == 0);
      CHECK(batch.truncateds[i] == 0);
      CHECK(batch.rewards[i] == 0.0f);
      CHECK(batch.elapsed_steps[i] == 0);
    }
  }
  CHECK(ids.size() == 10);
}

TEST_CASE("async_reset with batch_size == num_envs: one recv returns everyone") {
  auto pool = make(cartpole_config(6, 6, 2));
  pool->async_reset();
  StateBatch batch = pool->recv();
  CHECK(batch.size == 6);
  std::vector<int32_t> ids(batch.env_ids);
  std::sort(ids.begin(), ids.end());
  CHECK(ids == std::vector<int32_t>{0, 1, 2, 3, 4, 5});
  for (int64_t i = 0; i < batch.size; ++i) CHECK(batch.dones[i] == 0);
}

TEST_CASE("send/recv before starting the pool are protocol violations") {
  auto pool = make(cartpole_config(2, 2, 1));
  const std::vector<int32_t> ids{0, 1};
  CHECK_THROWS_AS(pool->send(zeros(2), ids), ProtocolViolationError);
  CHECK_THROWS_AS(pool->recv(), ProtocolViolationError);
}

TEST_CASE("send: one in-flight action per env, re-arming only after recv") {
  auto pool = make(cartpole_config(2, 2, 1));
  pool->reset();

  const std::vector<int32_t> id0{0};
  const std::vector<int32_t> id1{1};
  pool->send(zeros(1), id0);
  CHECK_THROWS_AS(pool->send(zeros(1), id0), ProtocolViolationError);
  pool->send(zeros(1), id1);  // the rollback left env 1 sendable
  StateBatch batch = pool->recv();
  CHECK(batch.size == 2);

  // Everything returned; both are sendable again.
  CHECK_NOTHROW(pool->send(zeros(2), std::vector<int32_t>{0, 1}));
  pool->recv();
}

TEST_CASE("send: validation failures") {
  auto pool = make(cartpole_config(2, 2, 1));
  pool->reset();
  const std::vector<int32_t> ids{0, 1};
  CHECK_THROWS_AS(pool->send(zeros(1), ids), ActionShapeMismatchError);
  CHECK_THROWS_AS(pool->send(std::vector<ActionPayload>{int32_t{2}, int32_t{0}}, ids),
                  ActionOutOfRangeError);
  CHECK_THROWS_AS(pool->send(zeros(2), std::vector<int32_t>{0, 7}),
                  ProtocolViolationError);
  // None of the failures consumed the in-flight budget.
  CHECK_NOTHROW(pool->send(zeros(2), ids));
  pool->recv();
}

TEST_CASE("send returns without waiting for environment execution") {
  auto pool = make(delay_config(2, 2, 2, 100000.0));  // 100 ms sleep steps
  pool->async_reset();
  pool->recv();

  const auto t0 = Clock::now();
  pool->send(zeros(2), std::vector<int32_t>{0, 1});
  const double send_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  StateBatch batch = pool->recv();
  const double total_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  CHECK(send_ms < 50.0);
  CHECK(total_ms >= 90.0);
  CHECK(batch.size == 2);
}

TEST_CASE("recv: async batch has batch_size records with distinct env_ids") {
  auto pool = make(cartpole_config(10, 9, 4));
  pool->async_reset();
  StateBatch batch = pool->recv();
  CHECK(batch.size == 9);
  std::set<int32_t> distinct(batch.env_ids.begin(), batch.env_ids.end());
  CHECK(distinct.size() == 9);
  for (int32_t id : distinct) {
    CHECK(id >= 0);
    CHECK(id < 10);
  }
}

TEST_CASE("recv: a straggler is excluded from the first async batch") {
  PoolConfig cfg = delay_config(10, 5, 4, 1000.0);  // 1 ms envs
  cfg.env_params["slow_id"] = 0.0;                  // env 0 takes 100 ms
  cfg.env_params["slow_us"] = 100000.0;
  auto pool = make(cfg);

  const auto t0 = Clock::now();
  pool->async_reset();
  StateBatch batch = pool->recv();
  const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

  CHECK(batch.size == 5);
  CHECK(std::find(batch.env_ids.begin(), batch.env_ids.end(), 0) ==
        batch.env_ids.end());
  CHECK(ms < 50.0);
}

TEST_CASE("step is exactly send followed by recv") {
  PoolConfig a = cartpole_config(4, 4, 2);
  a.order_by_env_id = true;
  PoolConfig b = a;
  auto pool_a = make(a);
  auto pool_b = make(b);
  StateBatch batch_a = pool_a->reset();
  StateBatch batch_b = pool_b->reset();
  REQUIRE(batches_equal(batch_a, batch_b));

  for (int32_t t = 0; t < 50; ++t) {
    const std::vector<int32_t> ids_a(batch_a.env_ids);
    const std::vector<int32_t> ids_b(batch_b.env_ids);
    batch_a = pool_a->step(actions_for(ids_a, t), ids_a);
    pool_b->send(actions_for(ids_b, t), ids_b);
    batch_b = pool_b->recv();
    REQUIRE(batches_equal(batch_a, batch_b));
  }
}

TEST_CASE("step in async mode returns batch_size records") {
  auto pool = make(cartpole_config(10, 9, 4));
  pool->async_reset();
  StateBatch batch = pool->recv();
  const std::vector<int32_t> ids(batch.env_ids);
  StateBatch next = pool->step(actions_for(ids, 0), ids);
  CHECK(next.size == 9);
}

TEST_CASE("reset: synchronous facade returns all envs ordered by env_id") {
  auto pool = make(cartpole_config(4, 4, 2, 7));
  StateBatch batch = pool->reset();
  CHECK(batch.env_ids == std::vector<int32_t>{0, 1, 2, 3});
  for (int64_t i = 0; i < batch.size; ++i) {
    CHECK(batch.dones[i] == 0);
    const float* obs = batch.obs_f32(i);
    for (int k = 0; k < 4; ++k) {
      CHECK(obs[k] >= -0.05f);
      CHECK(obs[k] <= 0.05f);
    }
  }
  CHECK_THROWS_AS(pool->reset(), AlreadyStartedError);

  auto async_pool = make(cartpole_config(4, 2, 2));
  CHECK_THROWS_AS(async_pool->reset(), SyncOnlyError);
}

TEST_CASE("ordered mode sorts sync batches; unordered preserves completion order") {
  PoolConfig ordered = cartpole_config(4, 4, 2);
  ordered.order_by_env_id = true;
  auto pool = make(ordered);
  StateBatch batch = pool->reset();
  for (int t = 0; t < 20; ++t) {
    batch = pool->step(actions_for({0, 1, 2, 3}, t), std::vector<int32_t>{0, 1, 2, 3});
    CHECK(batch.env_ids == std::vector<int32_t>{0, 1, 2, 3});
  }

  auto unordered = make(cartpole_config(4, 4, 2));
  unordered->async_reset();
  StateBatch u = unordered->recv();
  std::vector<int32_t> ids(u.env_ids);
  std::sort(ids.begin(), ids.end());
  CHECK(ids == std::vector<int32_t>{0, 1, 2, 3});

  PoolConfig bad = cartpole_config(4, 2, 2);
  bad.order_by_env_id = true;
  CHECK_THROWS_AS(make(bad), InvalidConfigError);
}

TEST_CASE("conservation: records per env equal sends per env plus the reset") {
  auto pool = make(cartpole_config(16, 4, 4, 11));
  std::vector<int64_t> sends(16, 0);
  std::vector<int64_t> records(16, 0);

  pool->async_reset();
  for (int cycle = 0; cycle < 1000; ++cycle) {
    StateBatch batch = pool->recv();
    CHECK(batch.size == 4);
    std::set<int32_t> distinct(batch.env_ids.begin(), batch.env_ids.end());
    CHECK(distinct.size() == 4);
    const std::vector<int32_t> ids(batch.env_ids);
    for (int32_t id : ids) ++records[id];
    pool->send(actions_for(ids, cycle), ids);
    for (int32_t id : ids) ++sends[id];
  }
  // Drain the 16 in-flight actions without sending new ones.
  for (int r = 0; r < 4; ++r) {
    StateBatch batch = pool->recv();
    for (int32_t id : batch.env_ids) ++records[id];
  }

  int64_t total_sends = 0;
  for (int e = 0; e < 16; ++e) {
    CHECK(records[e] == sends[e] + 1);
    total_sends += sends[e];
  }
  CHECK(pool->total_received() == total_sends + 16);
}

TEST_CASE("auto-reset: a done record is followed by a fresh episode record") {
  PoolConfig cfg = cartpole_config(2, 2, 2, 3);
  cfg.order_by_env_id = true;
  auto pool = make(cfg);
  StateBatch batch = pool->reset();

  std::vector<int32_t> expected_elapsed{1, 1};
  bool saw_done = false;
  for (int t = 0; t < 400; ++t) {
    // Constant push right destabilizes the pole within a few dozen steps.
    batch = pool->step(std::vector<ActionPayload>{int32_t{1}, int32_t{1}},
                       std::vector<int32_t>{0, 1});
    for (int64_t i = 0; i < batch.size; ++i) {
      if (expected_elapsed[i] == 0) {
        // Previous record was done: this one must be the auto-reset record.
        CHECK(batch.elapsed_steps[i] == 0);
        CHECK(batch.rewards[i] == 0.0f);
        CHECK(batch.dones[i] == 0);
        const float* obs = batch.obs_f32(i);
        for (int k = 0; k < 4; ++k) CHECK(std::abs(obs[k]) <= 0.05f);
        expected_elapsed[i] = 1;
      } else {
        CHECK(batch.elapsed_steps[i] == expected_elapsed[i]);
        ++expected_elapsed[i];
      }
      if (batch.dones[i]) {
        saw_done = true;
        expected_elapsed[i] = 0;
      }
    }
  }
  CHECK(saw_done);
}

TEST_CASE("pool can be driven by separate sender and receiver threads") {
  auto pool = make(cartpole_config(8, 4, 2, 5));
  constexpr int kCycles = 500;

  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::vector<int32_t>> id_queue;
  std::atomic<int64_t> received{0};

  pool->async_reset();
  std::thread receiver([&] {
    for (int c = 0; c < kCycles; ++c) {
      StateBatch batch = pool->recv();
      received.fetch_add(batch.size);
      std::lock_guard lock(mu);
      id_queue.emplace_back(batch.env_ids);
      cv.notify_one();
    }
  });
  std::thread sender([&] {
    for (int c = 0; c < kCycles - 2; ++c) {  // leave the last batches un-answered
      std::vector<int32_t> ids;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return !id_queue.empty(); });
        ids = std::move(id_queue.front());
        id_queue.pop_front();
      }
      pool->send(actions_for(ids, c), ids);
    }
  });

  sender.join();
  receiver.join();
  CHECK(received.load() == kCycles * 4);
}

namespace {

// Terminates every third step; also records whether two workers ever overlap
// inside one instance.
class EpisodeProbeEnv final : public Environment {
 public:
  static std::atomic<int64_t> overlaps;

  explicit EpisodeProbeEnv(const EnvContext& ctx) : Environment(ctx) {}

  static EnvSpec spec(const PoolConfig&) {
    EnvSpec s;
    s.name = "EpisodeProbe";
    s.observation = ObsLayout{{1}, ScalarKind::Float32};
    s.action = DiscreteSpace{2};
    return s;
  }

  void write_observation(void* dst) const override {
    *static_cast<float*>(dst) = static_cast<float>(steps_);
  }

 private:
  void do_reset() override { enter(); steps_ = 0; leave(); }
  float do_step(const ActionPayload&) override {
    enter();
    ++steps_;
    leave();
    return 1.0f;
  }
  bool is_done() const override { return steps_ % 3 == 0; }

  void enter() {
    if (entered_.fetch_add(1) != 0) overlaps.fetch_add(1);
  }
  void leave() { entered_.fetch_sub(1); }

  int32_t steps_ = 0;
  std::atomic<int32_t> entered_{0};
};

std::atomic<int64_t> EpisodeProbeEnv::overlaps{0};

}  // namespace

TEST_CASE("executor: no two workers ever run the same env instance") {
  register_task("EpisodeProbe", &EpisodeProbeEnv::spec,
                [](const EnvContext& ctx) -> std::unique_ptr<Environment> {
                  return std::make_unique<EpisodeProbeEnv>(ctx);
                });
  PoolConfig cfg;
  cfg.task_id = "EpisodeProbe";
  cfg.num_envs = 8;
  cfg.batch_size = 4;
  cfg.num_threads = 4;
  auto pool = make(cfg);
  pool->async_reset();
  for (int c = 0; c < 500; ++c) {
    StateBatch batch = pool->recv();
    const std::vector<int32_t> ids(batch.env_ids);
    pool->send(zeros(ids.size()), ids);
  }
  CHECK(EpisodeProbeEnv::overlaps.load() == 0);
}

TEST_CASE("executor: pinning requests degrade gracefully") {
  PoolConfig cfg = cartpole_config(4, 4, 4);
  cfg.pin_cores = true;
  auto pool = make(cfg);
  StateBatch batch = pool->reset();
  CHECK(batch.size == 4);
  CHECK(Executor::core_for_worker(0, 12) == 0);
  CHECK(Executor::core_for_worker(7, 12) == 7);
  CHECK(Executor::core_for_worker(7, 4) == 3);
  CHECK(Executor::core_for_worker(3, 1) == 0);
}

TEST_CASE("close: drains an in-flight step before returning, then is idempotent") {
  auto pool = make(delay_config(1, 1, 1, 50000.0));  // one 50 ms step
  pool->async_reset();
  pool->recv();
  pool->send(zeros(1), std::vector<int32_t>{0});
  const auto t0 = Clock::now();
  pool->close();
  const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  CHECK(ms < 2000.0);
  pool->close();
  CHECK_THROWS_AS(pool->recv(), ProtocolViolationError);
}

namespace {

class FaultyEnv final : public Environment {
 public:
  explicit FaultyEnv(const EnvContext& ctx) : Environment(ctx) {}

  static EnvSpec spec(const PoolConfig&) {
    EnvSpec s;
    s.name = "Faulty";
    s.observation = ObsLayout{{1}, ScalarKind::Float32};
    s.action = DiscreteSpace{2};
    return s;
  }

  void write_observation(void* dst) const override {
    *static_cast<float*>(dst) = 0.f;
  }

 private:
  void do_reset() override { steps_ = 0; }
  float do_step(const ActionPayload&) override {
    if (++steps_ >= 3 && env_id() == 0) {
      throw std::runtime_error("synthetic environment fault");
    }
    return 0.0f;
  }
  bool is_done() const override { return false; }

  int32_t steps_ = 0;
};

}  // namespace

TEST_CASE("an environment fault poisons the pool and recv reports it") {
  register_task("Faulty", &FaultyEnv::spec,
                [](const EnvContext& ctx) -> std::unique_ptr<Environment> {
                  return std::make_unique<FaultyEnv>(ctx);
                });
  PoolConfig cfg;
  cfg.task_id = "Faulty";
  cfg.num_envs = 2;
  cfg.batch_size = 2;
  cfg.num_threads = 2;
  auto pool = make(cfg);
  pool->async_reset();

  bool failed = false;
  try {
    for (int c = 0; c < 10; ++c) {
      StateBatch batch = pool->recv();
      const std::vector<int32_t> ids(batch.env_ids);
      pool->send(zeros(ids.size()), ids);
    }
  } catch (const PoolFailedError&) {
    failed = true;
  }
  CHECK(failed);
  CHECK_THROWS_AS(pool->recv(), PoolFailedError);
}

TEST_CASE("recv_for: times out quietly when nothing is in flight") {
  auto pool = make(cartpole_config(2, 2, 1));
  pool->reset();  // everything returned, nothing in flight
  const auto t0 = Clock::now();
  CHECK_FALSE(pool->recv_for(50ms).has_value());
  CHECK(Clock::now() - t0 >= 45ms);
}
