#include "socialarm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "socialarm/parallel.hpp"

namespace socialarm {

namespace {
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
}

EngineSettings EngineSettings::from_scenario(const Scenario& s) {
  EngineSettings e;
  e.seed = s.seed;
  e.dt = s.dt;
  e.condition = s.condition;
  e.weights = s.weights;
  e.drift = s.drift;
  e.motion = s.motion;
  e.robot = s.robot;
  e.body = s.body;
  return e;
}

Engine::Engine(EngineSettings settings) : settings_(std::move(settings)) { reset(settings_.seed); }

void Engine::reset(std::uint64_t seed) {
  settings_.seed = seed;
  tick_ = 0;
  drift_rng_ = Rng::stream(seed, "drift");
  idle_rng_ = Rng::stream(seed, "idle");
  attention_ = {};
  drift_ = {};
  next_idle_id_ = 1;
  next_idle_at_ = 0.0;
  glances_.clear();
  cooldowns_.clear();
  prev_obs_.clear();
  const ArousalProfile profile = arousal_profile(settings_.condition.arousal, settings_.motion);
  commanded_ = clamp_to_limits(settings_.robot, blend_posture(settings_.robot, profile.posture_blend));
  emitted_ = commanded_;
  refresh_idle_target(0.0);
}

void Engine::set_arousal(double level) {
  arousal_profile(level, settings_.motion);  // range check
  settings_.condition.arousal = level;
}

void Engine::set_attention(AttentionMode mode) { settings_.condition.attention = mode; }

void Engine::refresh_idle_target(double t) {
  if (t + 1e-9 < next_idle_at_) return;
  idle_.target_id = next_idle_id_++;
  idle_.kind = TargetKind::idle;
  idle_.born_at = t;
  idle_.lifespan = settings_.motion.idle_period;
  idle_.pos = sample_shell(settings_.drift.shell, settings_.robot.base_pose, idle_rng_);
  next_idle_at_ = t + settings_.motion.idle_period;
}

TraceRecord Engine::step(const std::vector<SkeletonObservation>& persons) {
  const double dt = settings_.dt;
  const double t = time();
  const AttentionMode mode = settings_.condition.attention;
  const ArousalProfile profile = arousal_profile(settings_.condition.arousal, settings_.motion);

  WorldState world;
  world.tick = tick_;
  world.time = t;
  world.persons = persons;
  world.robot_pose = emitted_;
  world.robot_base = settings_.robot.base_position();

  // Glances skip whoever held attention coming into this tick.
  const std::optional<int> incumbent = attention_.current_target;
  AttentionStep att = step_attention(world, std::move(attention_), settings_.weights, dt, mode);
  attention_ = std::move(att.state);

  drift_ = step_drift(std::move(drift_), settings_.condition.arousal, settings_.drift, settings_.robot.base_pose,
                      drift_rng_, t, dt);
  refresh_idle_target(t);

  std::erase_if(glances_, [t](const GazeCommand& g) { return !g.active(t); });
  if (mode == AttentionMode::high) {
    auto fresh = schedule_glance(prev_obs_, persons, incumbent, t, settings_.motion, cooldowns_);
    glances_.insert(glances_.end(), fresh.begin(), fresh.end());
  } else {
    glances_.clear();
  }

  std::optional<GazeCommand> primary;
  if (attention_.current_target) {
    for (const auto& o : persons) {
      if (o.person_id == *attention_.current_target) {
        primary = GazeCommand{gaze_point(o, settings_.body), GazePriority::primary, std::nullopt, o.person_id};
      }
    }
  }
  const GazeCommand gaze = resolve_gaze(primary, glances_, drift_.targets, idle_, mode, t);

  const JointVector breath = breath_offset(profile, settings_.robot, t);
  const GazeSolution sol =
      solve_gaze_pose(settings_.robot, commanded_, gaze.target_pos, profile, settings_.motion, breath);
  const MotionStep motion = step_motion(commanded_, sol.setpoint, profile, settings_.robot, t, dt);
  commanded_ = motion.commanded;
  emitted_ = motion.emitted;

  TraceRecord rec;
  rec.tick = tick_;
  rec.time = t;
  rec.pose = emitted_;
  rec.commanded = commanded_;
  rec.gaze = gaze;
  rec.attended = attention_.current_target;
  rec.attention = std::move(att.records);
  rec.drift_targets = drift_.targets;
  rec.idle_target = idle_;
  rec.saturated = sol.saturated;
  rec.gaze_error_deg = gaze_error(settings_.robot, emitted_, gaze.target_pos) * kRadToDeg;
  rec.arousal = settings_.condition.arousal;
  rec.attention_mode = mode;

  prev_obs_ = persons;
  ++tick_;
  return rec;
}

void MetricsAccumulator::add(const TraceRecord& r) {
  ++ticks_;
  if (r.gaze.person_targeted()) ++person_ticks_;
  error_sum_ += r.gaze_error_deg;
  if (r.saturated) ++saturated_;
  peak_breath_ = std::max(peak_breath_, (r.pose.q - r.commanded.q).cwiseAbs().maxCoeff());
  if (last_) {
    if (last_->gaze.priority != r.gaze.priority || last_->gaze.target_id != r.gaze.target_id) ++switches_;
    speed_sum_ += (r.pose.q - last_->pose.q).cwiseAbs().mean() / dt_;
  }
  last_ = r;
}

RunMetrics MetricsAccumulator::finish(int drift_event_count) const {
  RunMetrics m;
  m.ticks = ticks_;
  m.duration = static_cast<double>(ticks_) * dt_;
  if (ticks_ > 0) {
    m.person_gaze_fraction = static_cast<double>(person_ticks_) / static_cast<double>(ticks_);
    m.mean_gaze_error_deg = error_sum_ / static_cast<double>(ticks_);
  }
  if (ticks_ > 1) m.mean_abs_joint_speed = speed_sum_ / static_cast<double>(ticks_ - 1);
  m.switch_count = switches_;
  m.drift_event_count = drift_event_count;
  m.peak_breath_excursion = peak_breath_;
  m.saturated_ticks = saturated_;
  return m;
}

RunMetrics run(const Scenario& scenario, const TraceVisitor& visit) {
  validate(scenario);
  Engine engine(EngineSettings::from_scenario(scenario));
  MetricsAccumulator acc(scenario.dt);
  const std::int64_t n = scenario.tick_count();
  for (std::int64_t k = 0; k < n; ++k) {
    const TraceRecord rec = engine.step(ingest_scenario_tick(scenario, k));
    acc.add(rec);
    if (visit) visit(rec);
  }
  return acc.finish(engine.drift_spawn_count());
}

RunResult run(const Scenario& scenario) {
  RunResult out;
  out.trace.reserve(static_cast<std::size_t>(std::max<std::int64_t>(0, scenario.tick_count())));
  out.metrics = run(scenario, [&](const TraceRecord& r) { out.trace.push_back(r); });
  return out;
}

Scenario with_condition(Scenario scenario, const Condition& condition) {
  scenario.condition = condition;
  return scenario;
}

std::array<SuiteEntry, 4> run_condition_suite(const Scenario& base, Execution exec) {
  const auto& presets = condition_presets();
  std::vector<Scenario> scenarios;
  for (const auto& p : presets) scenarios.push_back(with_condition(base, p.condition));
  std::vector<RunResult> results =
      exec == Execution::parallel ? parallel::run_batch(scenarios) : serial::run_batch(scenarios);
  std::array<SuiteEntry, 4> out;
  for (std::size_t i = 0; i < presets.size(); ++i) out[i] = {presets[i], std::move(results[i])};
  return out;
}

}  // namespace socialarm
