#include <cmath>
#include <random>

#include "doctest.h"
#include "socialarm/drift.hpp"
#include "socialarm/errors.hpp"
#include "socialarm/robot_model.hpp"

using namespace socialarm;

namespace {

const double kDt = 1.0 / 30.0;

Transform base() { return default_robot_model().base_pose; }

struct Count {
  int spawns = 0;
  std::int64_t eligible_ticks = 0;
};

// Runs step_drift and counts the ticks on which a spawn was possible.
Count simulate(std::uint64_t seed, double arousal, std::int64_t ticks, const DriftConfig& cfg = {}) {
  Rng rng = Rng::stream(seed, "drift");
  DriftState s;
  Count c;
  for (std::int64_t tick = 0; tick < ticks; ++tick) {
    const double t = tick * kDt;
    bool live = false;
    for (const auto& v : s.targets) live |= !v.expired(t);
    if (!live) ++c.eligible_ticks;
    s = step_drift(s, arousal, cfg, base(), rng, t, kDt);
  }
  c.spawns = s.spawn_count;
  return c;
}

}  // namespace

TEST_CASE("drift rate is linear in arousal") {
  DriftConfig cfg;
  CHECK(drift_rate(1.0, cfg) == cfg.rate_min);
  CHECK(drift_rate(10.0, cfg) == doctest::Approx(cfg.rate_max).epsilon(1e-15));
  CHECK(drift_rate(5.5, cfg) == doctest::Approx((cfg.rate_min + cfg.rate_max) / 2));
  double prev = -1.0;
  for (double a = 1.0; a <= 10.0; a += 0.5) {
    CHECK(drift_rate(a, cfg) > prev);
    prev = drift_rate(a, cfg);
  }
  CHECK_THROWS_AS(drift_rate(0.5, cfg), ValidationError);
  CHECK_THROWS_AS(drift_rate(10.5, cfg), ValidationError);
}

TEST_CASE("zero rate only removes expired targets") {
  DriftConfig cfg;
  cfg.rate_min = cfg.rate_max = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    DriftState s;
    s.targets.push_back({7, {0.5, 0, 1.2}, 0.0, 0.5, TargetKind::drift});
    for (int tick = 0; tick < 300; ++tick) s = step_drift(s, 10.0, cfg, base(), rng, tick * kDt, kDt);
    CHECK(s.targets.empty());
    CHECK(s.spawn_count == 0);
  }
}

TEST_CASE("expiry boundary") {
  DriftConfig cfg;
  cfg.rate_min = cfg.rate_max = 0.0;
  Rng rng(1);
  DriftState s;
  s.targets.push_back({1, {0.5, 0, 1.2}, 2.0, 1.0, TargetKind::drift});
  CHECK(step_drift(s, 1.0, cfg, base(), rng, 2.999, kDt).targets.size() == 1);
  CHECK(step_drift(s, 1.0, cfg, base(), rng, 3.0, kDt).targets.empty());
}

TEST_CASE("spawned targets lie in the shell, live briefly and never overlap") {
  DriftConfig cfg;
  cfg.rate_min = 1.0;
  cfg.rate_max = 5.0;
  Rng rng(8);
  DriftState s;
  const Transform inv = base().inverse();
  for (int tick = 0; tick < 20000; ++tick) {
    const double t = tick * kDt;
    s = step_drift(s, 10.0, cfg, base(), rng, t, kDt);
    REQUIRE(s.targets.size() <= 1);
    for (const auto& v : s.targets) {
      CHECK(v.kind == TargetKind::drift);
      CHECK(cfg.shell.contains(inv * v.pos));
      CHECK(v.lifespan >= cfg.lifespan_min);
      CHECK(v.lifespan <= cfg.lifespan_max);
      CHECK((v.pos - base().translation()).norm() < default_robot_model().reach_radius());
    }
  }
  CHECK(s.spawn_count > 300);
}

TEST_CASE("shell sampling is uniform by area") {
  SpawnShell shell;
  Rng rng(21);
  const double r_half = std::sqrt((shell.r_min * shell.r_min + shell.r_max * shell.r_max) / 2);
  int inner = 0, left = 0, low = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const Vec3 p = sample_shell(shell, Transform::Identity(), rng);
    REQUIRE(shell.contains(p));
    inner += std::hypot(p.x(), p.y()) < r_half;
    left += p.y() > 0;
    low += p.z() < (shell.z_min + shell.z_max) / 2;
  }
  CHECK(inner / double(n) == doctest::Approx(0.5).epsilon(0.03));
  CHECK(left / double(n) == doctest::Approx(0.5).epsilon(0.03));
  CHECK(low / double(n) == doctest::Approx(0.5).epsilon(0.03));
}

// Independent brute force of the same rule (Bernoulli per tick, one live
// target, uniform lifespan) using std distributions.
double monte_carlo_mean_spawns(double rate, std::int64_t ticks, int runs) {
  std::mt19937_64 g(12345);
  std::uniform_real_distribution<double> u(0.0, 1.0), life(0.5, 2.0);
  double total = 0.0;
  for (int r = 0; r < runs; ++r) {
    bool alive = false;
    double born = 0.0, lifespan = 0.0;
    for (std::int64_t k = 0; k < ticks; ++k) {
      const double t = k * kDt;
      if (alive && t - born >= lifespan) alive = false;
      if (alive) continue;
      if (u(g) < rate * kDt) {
        alive = true;
        born = t;
        lifespan = life(g);
        total += 1.0;
      }
    }
  }
  return total / runs;
}

TEST_CASE("spawn count at seed 42 matches the Monte Carlo expectation") {
  const Count c = simulate(42, 10.0, 10000);
  const double expected = monte_carlo_mean_spawns(DriftConfig{}.rate_max, 10000, 4000);
  const double realised = DriftConfig{}.rate_max * c.eligible_ticks * kDt;
  CAPTURE(c.spawns);
  CAPTURE(expected);
  MESSAGE("seed 42: " << c.spawns << " spawns, expectation " << expected << ", rate x own eligible time " << realised);
  CHECK(std::abs(c.spawns - expected) <= 0.15 * expected);
}

TEST_CASE("mean spawn count over many seeds matches rate times eligible time") {
  long spawns = 0;
  double expected = 0.0;
  for (std::uint64_t seed = 100; seed < 150; ++seed) {
    const Count c = simulate(seed, 10.0, 10000);
    spawns += c.spawns;
    expected += DriftConfig{}.rate_max * c.eligible_ticks * kDt;
  }
  CHECK(std::abs(spawns - expected) <= 0.05 * expected);
}

TEST_CASE("high arousal spawns at least three times as often over 20 seeds") {
  long high = 0, low = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    high += simulate(seed, 10.0, 10000).spawns;
    low += simulate(seed, 1.0, 10000).spawns;
  }
  CAPTURE(high);
  CAPTURE(low);
  CHECK(low > 0);
  CHECK(high >= 3 * low);
}

TEST_CASE("same seed, same spawn sequence") {
  auto sequence = [](std::uint64_t seed) {
    Rng rng = Rng::stream(seed, "drift");
    DriftState s;
    std::vector<VirtualTarget> spawned;
    for (int tick = 0; tick < 5000; ++tick) {
      const int before = s.spawn_count;
      s = step_drift(s, 7.0, {}, base(), rng, tick * kDt, kDt);
      if (s.spawn_count != before) spawned.push_back(s.targets.back());
    }
    return spawned;
  };
  const auto a = sequence(5), b = sequence(5), c = sequence(6);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].pos == b[i].pos);
    CHECK(a[i].born_at == b[i].born_at);
    CHECK(a[i].lifespan == b[i].lifespan);
  }
  CHECK((a.size() != c.size() || a.front().pos != c.front().pos));
}

TEST_CASE("named streams are independent and reproducible") {
  Rng a = Rng::stream(42, "drift"), b = Rng::stream(42, "drift"), c = Rng::stream(42, "idle");
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  Rng r(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("drift config validation") {
  DriftConfig cfg;
  CHECK_NOTHROW(cfg.validate("drift", kDt, default_robot_model().reach_radius()));
  cfg.rate_max = 20.0;
  CHECK_THROWS_AS(cfg.validate("drift", kDt), ValidationError);
  cfg = {};
  cfg.shell.r_max = 3.0;
  try {
    cfg.validate("drift", kDt, default_robot_model().reach_radius());
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "drift.spawn_shell");
  }
  const auto parsed = drift_config_from_json(nlohmann::json::parse(R"({"rate_max": 0.4, "lifespan_range": [1, 3]})"));
  CHECK(parsed.rate_max == 0.4);
  CHECK(parsed.lifespan_max == 3.0);
  CHECK_THROWS_AS(drift_config_from_json(nlohmann::json::parse(R"({"lifespan_range": [3, 1]})")), ValidationError);
}
