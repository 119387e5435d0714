#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "socialarm/attention.hpp"
#include "socialarm/drift.hpp"
#include "socialarm/motion.hpp"
#include "socialarm/rng.hpp"
#include "socialarm/scenario.hpp"

namespace socialarm {

/// Everything an engine needs besides the per-tick observations.
struct EngineSettings {
  std::uint64_t seed = 0;
  double dt = 1.0 / 30.0;
  Condition condition;
  AttentionWeights weights;
  DriftConfig drift;
  MotionConfig motion;
  RobotModel robot = default_robot_model();
  BodyModel body;

  static EngineSettings from_scenario(const Scenario& s);
};

struct TraceRecord {
  std::int64_t tick = 0;
  double time = 0.0;
  JointPose pose;       // emitted
  JointPose commanded;  // before breathing
  GazeCommand gaze;
  std::optional<int> attended;
  std::vector<AttentionRecord> attention;
  std::vector<VirtualTarget> drift_targets;
  VirtualTarget idle_target;
  bool saturated = false;
  double gaze_error_deg = 0.0;
  double arousal = 1.0;
  AttentionMode attention_mode = AttentionMode::high;
};

struct RunMetrics {
  double person_gaze_fraction = 0.0;
  int switch_count = 0;
  double mean_gaze_error_deg = 0.0;
  double mean_abs_joint_speed = 0.0;  // rad/s, averaged over joints and ticks
  int drift_event_count = 0;
  double duration = 0.0;
  double peak_breath_excursion = 0.0;  // rad, max |emitted - commanded|
  int saturated_ticks = 0;
  std::int64_t ticks = 0;
};

/// One session's fixed-step loop. Per tick: attention, drift, idle target,
/// glances, gaze resolution, gaze solve, rate-limited motion.
class Engine {
 public:
  explicit Engine(EngineSettings settings);

  /// Advances one tick using the given observations (all stamped with the
  /// current tick time).
  TraceRecord step(const std::vector<SkeletonObservation>& persons);

  void set_arousal(double level);
  void set_attention(AttentionMode mode);
  /// Restarts the session from tick 0 with a new seed.
  void reset(std::uint64_t seed);

  std::int64_t tick() const { return tick_; }
  double time() const { return static_cast<double>(tick_) * settings_.dt; }
  const EngineSettings& settings() const { return settings_; }
  const JointPose& pose() const { return emitted_; }
  const AttentionState& attention_state() const { return attention_; }
  int drift_spawn_count() const { return drift_.spawn_count; }

 private:
  void refresh_idle_target(double t);

  EngineSettings settings_;
  std::int64_t tick_ = 0;
  Rng drift_rng_;
  Rng idle_rng_;
  AttentionState attention_;
  DriftState drift_;
  VirtualTarget idle_;
  int next_idle_id_ = 1;
  double next_idle_at_ = 0.0;
  std::vector<GazeCommand> glances_;
  GlanceCooldowns cooldowns_;
  std::vector<SkeletonObservation> prev_obs_;
  JointPose commanded_;
  JointPose emitted_;
};

/// Streaming metrics over consecutive trace records.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(double dt) : dt_(dt) {}
  void add(const TraceRecord& r);
  RunMetrics finish(int drift_event_count) const;

 private:
  double dt_;
  std::int64_t ticks_ = 0;
  std::int64_t person_ticks_ = 0;
  int switches_ = 0;
  double error_sum_ = 0.0;
  double speed_sum_ = 0.0;
  double peak_breath_ = 0.0;
  int saturated_ = 0;
  std::optional<TraceRecord> last_;
};

struct RunResult {
  std::vector<TraceRecord> trace;
  RunMetrics metrics;
};

using TraceVisitor = std::function<void(const TraceRecord&)>;

/// Runs the scenario for tick_count() ticks and keeps the trace.
RunResult run(const Scenario& scenario);

/// Runs without retaining the trace; each record is passed to `visit`.
RunMetrics run(const Scenario& scenario, const TraceVisitor& visit);

Scenario with_condition(Scenario scenario, const Condition& condition);

struct SuiteEntry {
  ConditionPreset preset;
  RunResult result;
};

enum class Execution { serial, parallel };

/// The scenario cloned across the four condition presets with the same
/// seed, in condition_presets() order. Results do not depend on `exec`.
std::array<SuiteEntry, 4> run_condition_suite(const Scenario& base, Execution exec = Execution::parallel);

}  // namespace socialarm
