#include <benchmark/benchmark.h>

#include <vector>

#include "socialarm/parallel.hpp"
#include "socialarm/rng.hpp"
#include "socialarm/scenario.hpp"

using namespace socialarm;

namespace {

std::vector<JointPose> random_poses(std::size_t n) {
  const RobotModel& m = default_robot_model();
  Rng rng(1);
  std::vector<JointPose> poses(n);
  for (auto& p : poses) {
    for (int j = 0; j < kJointCount; ++j) p.q[j] = rng.uniform(m.limits[j].min, m.limits[j].max);
  }
  return poses;
}

std::vector<Scenario> seeded_demos(std::size_t n) {
  std::vector<Scenario> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(demo_scenario({.seed = i, .dt = {}}));
  return out;
}

void BM_FkSerial(benchmark::State& state) {
  const auto poses = random_poses(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(serial::forward_kinematics_batch(default_robot_model(), poses));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_FkParallel(benchmark::State& state) {
  const auto poses = random_poses(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(parallel::forward_kinematics_batch(default_robot_model(), poses));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_RunBatchSerial(benchmark::State& state) {
  const auto scenarios = seeded_demos(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(serial::run_batch(scenarios, [](std::size_t, const TraceRecord&) {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_RunBatchParallel(benchmark::State& state) {
  const auto scenarios = seeded_demos(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(parallel::run_batch(scenarios, [](std::size_t, const TraceRecord&) {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_FkSerial)->Arg(1 << 10)->Arg(1 << 16);
BENCHMARK(BM_FkParallel)->Arg(1 << 10)->Arg(1 << 16);
BENCHMARK(BM_RunBatchSerial)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunBatchParallel)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
