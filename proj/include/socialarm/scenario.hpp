#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "socialarm/attention.hpp"
#include "socialarm/drift.hpp"
#include "socialarm/motion.hpp"
#include "socialarm/robot_model.hpp"
#include "socialarm/scene.hpp"

namespace socialarm {

struct Condition {
  double arousal = 1.0;
  AttentionMode attention = AttentionMode::high;
};

/// One cell of the 2x2 arousal x attention design.
struct ConditionPreset {
  std::string name;
  Condition condition;
};

inline constexpr double kArousalLow = 1.0;
inline constexpr double kArousalHigh = 10.0;

/// The four presets in a fixed order: (low, low), (low, high), (high, low),
/// (high, high) as (arousal, attention).
const std::array<ConditionPreset, 4>& condition_presets();

struct Waypoint {
  double t = 0.0;
  Vec3 pos = Vec3::Zero();
};

struct HandEvent {
  double t = 0.0;
  Hand hand = Hand::left;
  bool raise = true;
};

struct AgentScript {
  int id = 0;
  std::vector<Waypoint> waypoints;     // time-sorted
  std::vector<HandEvent> hand_events;  // time-sorted after load
  double enter_s = 0.0;
  std::optional<double> exit_s;

  /// Piecewise-linear torso position; clamps outside the waypoint span.
  Vec3 torso_at(double t) const;
  bool hand_raised_at(Hand hand, double t) const;
  bool active_at(double t) const;
};

/// Pre-recorded skeleton stream grouped by tick, hand flags debounced.
class RecordedStream {
 public:
  /// Consecutive ticks a raw hand state must persist before it is reported.
  static constexpr int kDebounceTicks = 3;

  RecordedStream() = default;

  /// Groups observations by tick = round(t / dt), rewrites their timestamps
  /// to tick * dt and debounces hand flags per person.
  static RecordedStream from_observations(std::vector<SkeletonObservation> observations, double dt);
  static RecordedStream load_jsonl(const std::filesystem::path& path, double dt);

  std::vector<SkeletonObservation> at_tick(std::int64_t tick) const;
  std::int64_t last_tick() const { return by_tick_.empty() ? -1 : by_tick_.rbegin()->first; }
  std::size_t size() const { return by_tick_.size(); }

 private:
  std::map<std::int64_t, std::vector<SkeletonObservation>> by_tick_;
};

struct Scenario {
  std::uint64_t seed = 0;
  double dt = 1.0 / 30.0;
  double duration_s = 10.0;
  Condition condition;
  std::vector<AgentScript> agents;
  std::optional<RecordedStream> recording;

  AttentionWeights weights;
  DriftConfig drift;
  MotionConfig motion;
  RobotModel robot = default_robot_model();
  BodyModel body;
  Workspace workspace;

  std::int64_t tick_count() const;
  double time_at(std::int64_t tick) const { return static_cast<double>(tick) * dt; }
};

/// Parses a scenario document. Relative `robot` and `recording` paths are
/// resolved against base_dir. Runs validate() before returning.
Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Command-line style overrides, applied to the document before parsing so
/// a recording is regridded to an overridden dt.
struct ScenarioOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
};

/// Throws IoError when the file cannot be read, ValidationError otherwise.
Scenario load_scenario(const std::filesystem::path& path, const ScenarioOverrides& overrides = {});

/// Bundled two-person demo.
Scenario demo_scenario(const ScenarioOverrides& overrides = {});
const char* demo_scenario_json();

/// Throws ValidationError naming the first offending field.
void validate(const Scenario& scenario);

/// Observations of every agent active at `tick`; velocities are finite
/// differences of the scripted path over dt (backward, forward at tick 0).
std::vector<SkeletonObservation> ingest_scenario_tick(const Scenario& scenario, std::int64_t tick);

nlohmann::json scenario_to_json(const Scenario& scenario);

}  // namespace socialarm
