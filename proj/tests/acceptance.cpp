#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "socialarm/attention.hpp"
#include "socialarm/drift.hpp"
#include "socialarm/harness.hpp"
#include "socialarm/motion.hpp"
#include "socialarm/parallel.hpp"
#include "socialarm/rng.hpp"
#include "socialarm/trace_io.hpp"
#include "support/builders.hpp"
#include "support/dh_oracle.hpp"

using namespace socialarm;
using testing_support::base_scenario;
using testing_support::deg;
using testing_support::person;
using testing_support::static_agent;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  std::string name;
  bool ok = false;
  std::string detail;
};

std::map<int, Outcome> g_outcomes;

void report(int id, const char* name, bool ok, const std::string& detail) {
  g_outcomes[id] = {name, ok, detail};
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double oracle_gaze_error(const RobotModel& m, const JointPose& pose, const Vec3& target) {
  std::array<double, 6> q{};
  for (int j = 0; j < 6; ++j) q[j] = pose.q[j];
  const Vec3 b = m.base_position();
  const auto t = oracle::chain(oracle::ur5e(), oracle::translation(b.x(), b.y(), b.z()), q);
  const double bx = target.x() - t[0][3], by = target.y() - t[1][3], bz = target.z() - t[2][3];
  const double n = std::sqrt(bx * bx + by * by + bz * bz);
  const double c = (t[0][2] * bx + t[1][2] * by + t[2][2] * bz) / n;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

// Random scenario for the property suite: 10000 ticks, up to 5 agents with
// presence windows, random paths and hand events, random weights.
Scenario random_scenario(std::uint64_t seed) {
  Rng rng(seed * 7919 + 1);
  Scenario s;
  s.seed = seed;
  s.duration_s = 10000 * s.dt;
  s.condition.arousal = rng.uniform(1.0, 10.0);
  s.condition.attention = rng.uniform() < 0.75 ? AttentionMode::high : AttentionMode::low;
  s.weights.m_hab = -rng.uniform(0.01, 2.0);
  s.weights.m_rest = rng.uniform(0.01, 2.0);
  s.weights.hysteresis_margin = rng.uniform(0.0, 0.3);
  const int agents = static_cast<int>(rng.uniform(0.0, 6.0));
  for (int id = 1; id <= agents; ++id) {
    AgentScript a;
    a.id = id;
    const int points = 1 + static_cast<int>(rng.uniform(0.0, 5.0));
    double t = 0.0;
    for (int k = 0; k < points; ++k) {
      a.waypoints.push_back({t, {rng.uniform(0.3, 4.5), rng.uniform(-4.0, 4.0), rng.uniform(0.8, 1.4)}});
      t += rng.uniform(1.0, s.duration_s / points);
    }
    double h = rng.uniform(0.0, 20.0);
    while (h < s.duration_s) {
      a.hand_events.push_back({h, rng.uniform() < 0.5 ? Hand::left : Hand::right, rng.uniform() < 0.5});
      h += rng.uniform(0.1, 30.0);
    }
    if (rng.uniform() < 0.5) {
      a.enter_s = rng.uniform(0.0, 100.0);
      a.exit_s = a.enter_s + rng.uniform(1.0, 200.0);
    }
    s.agents.push_back(a);
  }
  validate(s);
  return s;
}

struct PropertyStats {
  std::int64_t ticks = 0;
  std::int64_t theta_samples = 0;
  std::int64_t theta_violations = 0;
  std::int64_t limit_violations = 0;
  std::int64_t rate_violations = 0;
  double worst_rate_ratio = 0.0;
  std::optional<JointPose> prev;
};

void property_suite() {
  const auto start = Clock::now();
  std::vector<Scenario> scenarios;
  for (std::uint64_t seed = 0; seed < 50; ++seed) scenarios.push_back(random_scenario(seed));
  std::vector<PropertyStats> stats(scenarios.size());

  parallel::run_batch(scenarios, [&](std::size_t i, const TraceRecord& r) {
    PropertyStats& st = stats[i];
    const Scenario& s = scenarios[i];
    ++st.ticks;
    for (const auto& a : r.attention) {
      ++st.theta_samples;
      if (!(a.theta >= 0.0 && a.theta <= 1.0)) ++st.theta_violations;
    }
    if (!within_limits(s.robot, r.pose) || !within_limits(s.robot, r.commanded)) ++st.limit_violations;
    if (st.prev) {
      const double scale = arousal_profile(r.arousal, s.motion).speed_scale;
      for (int j = 0; j < kJointCount; ++j) {
        const double bound = scale * s.robot.velocity_limits[j] * s.dt;
        const double delta = std::abs(r.commanded.q[j] - st.prev->q[j]);
        if (delta > bound + 1e-12) ++st.rate_violations;
        st.worst_rate_ratio = std::max(st.worst_rate_ratio, delta / bound);
      }
    }
    st.prev = r.commanded;
  });
  const double secs = seconds_since(start);

  PropertyStats total;
  bool lengths_ok = true;
  for (const auto& st : stats) {
    lengths_ok &= st.ticks == 10000;
    total.ticks += st.ticks;
    total.theta_samples += st.theta_samples;
    total.theta_violations += st.theta_violations;
    total.limit_violations += st.limit_violations;
    total.rate_violations += st.rate_violations;
    total.worst_rate_ratio = std::max(total.worst_rate_ratio, st.worst_rate_ratio);
  }

  report(1, "habituation bounds", lengths_ok && total.theta_samples > 0 && total.theta_violations == 0 && secs < 30.0,
         fmt("50 scenarios x 10000 ticks, %lld theta samples, %lld outside [0,1], %.2f s", (long long)total.theta_samples,
             (long long)total.theta_violations, secs));
  report(10, "safety envelope", lengths_ok && total.limit_violations == 0 && total.rate_violations == 0,
         fmt("%lld ticks, %lld limit violations, %lld rate violations, worst delta %.4f of bound",
             (long long)total.ticks, (long long)total.limit_violations, (long long)total.rate_violations,
             total.worst_rate_ratio));
}

void proximity_priority() {
  Scenario s = base_scenario(1.0, 5.0, AttentionMode::high, 11);
  s.drift.rate_min = s.drift.rate_max = 0.0;
  const Vec3 base = s.robot.base_position();
  // the nearer person gets the higher id, so the tie-break cannot help it
  s.agents = {static_agent(1, base + Vec3(3.0, 0, 0)), static_agent(2, base + Vec3(1.0, 0, 0))};
  const RunResult r = run(s);
  const TraceRecord& first = r.trace.front();

  const AttentionWeights& w = s.weights;
  // first contact: theta = 1, no velocity, no raised hands
  const double phi_near = w.w_p * (w.w_proximity * std::exp(-w.lambda * 1.0)) + 1.0;
  const double phi_far = w.w_p * (w.w_proximity * std::exp(-w.lambda * 3.0)) + 1.0;
  bool ok = first.attention.size() == 2 && first.attended == 2 && first.gaze.target_id == 2;
  double got_far = NAN, got_near = NAN;
  if (first.attention.size() == 2) {
    got_far = first.attention[0].phi;
    got_near = first.attention[1].phi;
    ok = ok && got_far == phi_far && got_near == phi_near;
  }
  report(2, "proximity priority", ok,
         fmt("phi(1 m) = %.15f oracle %.15f, phi(3 m) = %.15f oracle %.15f, selected id %d", got_near, phi_near,
             got_far, phi_far, first.attended.value_or(-1)));
}

void alternation() {
  Scenario s = base_scenario(600.0, 5.0, AttentionMode::high, 5);
  s.drift.rate_min = s.drift.rate_max = 0.0;
  const Vec3 base = s.robot.base_position();
  s.agents = {static_agent(1, base + Vec3(2.0, 1.0, 0.3)), static_agent(2, base + Vec3(2.0, -1.0, 0.3))};
  const AttentionWeights& w = s.weights;
  const double predicted = w.hysteresis_margin / std::min(std::abs(w.m_hab), w.m_rest);

  std::vector<double> switches;
  std::optional<int> last;
  run(s, [&](const TraceRecord& r) {
    if (last && r.attended != last) switches.push_back(r.time);
    last = r.attended;
  });
  bool ok = switches.size() > 40;
  double measured = NAN;
  if (ok) {
    measured = (switches.back() - switches[switches.size() - 21]) / 20.0;
    ok = std::abs(measured - predicted) / predicted < 0.10;
  }
  report(3, "alternation dwell", ok,
         fmt("%zu switches, steady dwell %.4f s, closed form %.4f s, error %.2f%%", switches.size(), measured, predicted,
             100.0 * std::abs(measured - predicted) / predicted));
}

void hand_raise() {
  AttentionWeights w;
  w.w_hand = 0.37;
  const Vec3 base(0, 0, 0.8);
  Rng rng(5);
  int exact = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const Vec3 p(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(0.5, 2));
    const double lowered = position_score(person(1, p), base, w);
    const bool left = rng.uniform() < 0.5;
    const double raised = position_score(person(1, p, left, !left), base, w);
    if (raised == lowered + w.w_hand) ++exact;
  }

  Scenario s = base_scenario(12.0, 10.0, AttentionMode::high, 3);
  s.drift.rate_min = s.drift.rate_max = 0.0;
  AgentScript near = static_agent(1, {1.4, 0.0, 1.1});
  near.hand_events = {{0.0, Hand::left, true}, {0.0, Hand::right, true}};
  AgentScript far = static_agent(2, {3.5, 1.5, 1.1});
  far.hand_events = {{2.0, Hand::left, true}};
  s.agents = {near, far};
  const RunResult r = run(s);
  const std::int64_t raise_tick = std::llround(2.0 / s.dt);

  std::int64_t glance_tick = -1;
  for (std::int64_t k = raise_tick; k < static_cast<std::int64_t>(r.trace.size()); ++k) {
    const auto& g = r.trace[k].gaze;
    if (g.priority == GazePriority::glance && g.target_id == 2) {
      glance_tick = k;
      break;
    }
  }
  const bool prior_ok = r.trace[raise_tick - 1].gaze.priority == GazePriority::primary &&
                        r.trace[raise_tick - 1].gaze.target_id == 1;
  std::int64_t return_lag = -1;
  if (glance_tick >= 0) {
    const double expiry = *r.trace[glance_tick].gaze.expires_at;
    const std::int64_t expiry_tick = std::llround(std::ceil(expiry / s.dt - 1e-9));
    for (std::int64_t k = glance_tick; k < static_cast<std::int64_t>(r.trace.size()); ++k) {
      const auto& g = r.trace[k].gaze;
      if (g.priority == GazePriority::primary && g.target_id == 1) {
        return_lag = k - expiry_tick;
        break;
      }
    }
  }
  const std::int64_t glance_lag = glance_tick - raise_tick;
  const bool ok = exact == n && prior_ok && glance_tick >= 0 && glance_lag <= 2 && return_lag >= 0 && return_lag <= 1;
  report(4, "hand-raise salience", ok,
         fmt("P + w_hand exact in %d/%d, glance %lld ticks after raise, return %lld ticks after expiry", exact, n,
             (long long)glance_lag, (long long)return_lag));
}

struct Tracked {
  std::vector<JointPose> commanded;
  std::vector<JointPose> emitted;
};

// Engine motion pipeline against one fixed target.
Tracked track(const RobotModel& m, const MotionConfig& cfg, const ArousalProfile& p, const JointPose& start,
              const Vec3& target, double dt, int ticks) {
  Tracked out;
  JointPose commanded = start;
  for (int k = 0; k < ticks; ++k) {
    const double t = k * dt;
    const GazeSolution sol = solve_gaze_pose(m, commanded, target, p, cfg, breath_offset(p, m, t));
    const MotionStep step = step_motion(commanded, sol.setpoint, p, m, t, dt);
    commanded = step.commanded;
    out.commanded.push_back(step.commanded);
    out.emitted.push_back(step.emitted);
  }
  return out;
}

void gaze_accuracy() {
  const RobotModel& m = default_robot_model();
  const MotionConfig cfg;
  const DriftConfig drift;
  const double dt = 1.0 / 30.0;
  const auto p = arousal_profile(10.0, cfg);
  const JointPose start = blend_posture(m, p.posture_blend);
  const Vec3 ee0 = forward_kinematics(m, start).translation();
  const int window = 180;

  Rng rng(2024);
  int sampled = 0, excluded = 0, accurate = 0, in_time = 0;
  double worst_err = 0.0, worst_settle = 0.0;
  while (sampled < 200) {
    const Vec3 target = sample_shell(drift.shell, m.base_pose, rng);
    if ((target - ee0).norm() < cfg.exclusion_radius) {
      ++excluded;
      continue;
    }
    ++sampled;
    const Tracked tr = track(m, cfg, p, start, target, dt, window);
    int settle = 0;
    for (int k = 0; k < window; ++k) {
      if (deg(oracle_gaze_error(m, tr.emitted[k], target)) > 2.0) settle = k + 1;
    }
    const double err = deg(oracle_gaze_error(m, tr.emitted.back(), target));
    const double settle_s = settle * dt;
    worst_err = std::max(worst_err, err);
    worst_settle = std::max(worst_settle, settle_s);
    if (err <= 2.0) ++accurate;
    if (settle < window && settle_s <= 3.0) ++in_time;
  }
  report(5, "gaze accuracy", accurate == 200 && in_time == 200,
         fmt("arousal 10, %d shell targets (%d inside exclusion ball skipped), %d within 2 deg, %d settled by 3 s, "
             "worst error %.3f deg, worst settle %.2f s",
             sampled, excluded, accurate, in_time, worst_err, worst_settle));
}

void distal_priority() {
  const RobotModel& m = default_robot_model();
  const MotionConfig cfg;
  MotionConfig locked = cfg;
  locked.proximal_weight = 1e6;
  const double dt = 1.0 / 30.0;

  Rng rng(77);
  int targets = 0, rejected = 0, passing = 0;
  double worst = 0.0, proximal_sum = 0.0, distal_sum = 0.0;
  for (double a : {1.0, 5.0, 10.0}) {
    const auto p = arousal_profile(a, cfg);
    const JointPose start = blend_posture(m, p.posture_blend);
    int here = 0;
    while (here < 50) {
      JointPose aim = start;
      for (int j = 3; j < 6; ++j) aim.q[j] += rng.uniform(-0.6, 0.6);
      const Transform ee = forward_kinematics(m, aim);
      const Vec3 target = ee.translation() + rng.uniform(0.8, 2.5) * gaze_direction(m, ee);
      const GazeSolution lock = solve_gaze_pose(m, start, target, p, locked);
      if (deg(oracle_gaze_error(m, lock.setpoint, target)) >= 0.5) {
        ++rejected;
        continue;
      }
      ++here;
      ++targets;
      const Tracked tr = track(m, cfg, p, start, target, dt, 30 * 15);
      double proximal = 0.0, distal = 0.0;
      JointPose prev = start;
      for (const auto& q : tr.commanded) {
        for (int j = 0; j < 3; ++j) proximal += std::abs(q.q[j] - prev.q[j]);
        for (int j = 3; j < 6; ++j) distal += std::abs(q.q[j] - prev.q[j]);
        prev = q;
      }
      proximal_sum += proximal;
      distal_sum += distal;
      const double ratio = distal > 0.0 ? proximal / distal : (proximal > 0.0 ? INFINITY : 0.0);
      worst = std::max(worst, ratio);
      if (ratio < 0.10) ++passing;
    }
  }
  report(6, "distal priority", passing == targets,
         fmt("%d wrist-reachable targets at arousal 1/5/10 (%d rejected by the locked solve), proximal/distal travel "
             "worst %.4f, overall %.4f",
             targets, rejected, worst, proximal_sum / distal_sum));
}

void arousal_monotonicity() {
  const Scenario demo = demo_scenario();
  double speed[3], breath[3];
  const double levels[3] = {1.0, 5.0, 10.0};
  for (int i = 0; i < 3; ++i) {
    const RunMetrics mt = run(with_condition(demo, {levels[i], AttentionMode::high}), [](const TraceRecord&) {});
    speed[i] = mt.mean_abs_joint_speed;
    breath[i] = mt.peak_breath_excursion;
  }

  const DriftConfig cfg;
  const Transform base = default_robot_model().base_pose;
  const double dt = 1.0 / 30.0;
  auto spawns = [&](double arousal) {
    long total = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng = Rng::stream(seed, "drift");
      DriftState st;
      for (int k = 0; k < 10000; ++k) st = step_drift(std::move(st), arousal, cfg, base, rng, k * dt, dt);
      total += st.spawn_count;
    }
    return total;
  };
  const long low = spawns(1.0), high = spawns(10.0);

  const bool ok = speed[0] < speed[1] && speed[1] < speed[2] && breath[0] < breath[1] && breath[1] < breath[2] &&
                  low > 0 && high >= 3 * low;
  report(7, "arousal monotonicity", ok,
         fmt("speed %.4f < %.4f < %.4f rad/s, peak breath %.4f < %.4f < %.4f rad, drift spawns over 20 seeds %ld vs "
             "%ld (%.2fx)",
             speed[0], speed[1], speed[2], breath[0], breath[1], breath[2], high, low,
             low > 0 ? static_cast<double>(high) / low : 0.0));
}

void condition_suite() {
  const auto start = Clock::now();
  const auto suite = run_condition_suite(demo_scenario());
  const double secs = seconds_since(start);
  const auto& ll = suite[0].result.metrics;
  const auto& lh = suite[1].result.metrics;
  const auto& hl = suite[2].result.metrics;
  const auto& hh = suite[3].result.metrics;
  const bool ok = lh.person_gaze_fraction > 0.8 && hh.person_gaze_fraction > 0.8 && ll.person_gaze_fraction < 0.05 &&
                  hl.person_gaze_fraction < 0.05 && hl.mean_abs_joint_speed > ll.mean_abs_joint_speed &&
                  hh.mean_abs_joint_speed > lh.mean_abs_joint_speed && secs < 30.0;
  report(8, "condition suite", ok,
         fmt("person_gaze_fraction high attention %.3f/%.3f, low attention %.3f/%.3f, speed low->high arousal "
             "%.4f->%.4f and %.4f->%.4f, %.2f s",
             lh.person_gaze_fraction, hh.person_gaze_fraction, ll.person_gaze_fraction, hl.person_gaze_fraction,
             ll.mean_abs_joint_speed, hl.mean_abs_joint_speed, lh.mean_abs_joint_speed, hh.mean_abs_joint_speed, secs));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("socialarm_acceptance_" + std::to_string(::getpid()));
  const Scenario s = with_condition(demo_scenario(), {10.0, AttentionMode::high});
  write_run_outputs(root / "a", run(s), TraceFormat::jsonl);
  write_run_outputs(root / "b", run(s), TraceFormat::jsonl);
  const std::string a = slurp(root / "a" / "trace.jsonl");
  const std::string b = slurp(root / "b" / "trace.jsonl");
  const auto lines = std::count(a.begin(), a.end(), '\n');
  fs::remove_all(root);
  report(9, "determinism", !a.empty() && a == b,
         fmt("two runs of the demo scenario, %zu bytes / %ld lines each, identical: %s", a.size(), (long)lines,
             a == b ? "yes" : "no"));
}

}  // namespace

int main() {
  property_suite();
  proximity_priority();
  alternation();
  hand_raise();
  gaze_accuracy();
  distal_priority();
  arousal_monotonicity();
  condition_suite();
  determinism();
  int failures = 0;
  for (const auto& [id, o] : g_outcomes) {
    std::printf("%s %2d %s: %s\n", o.ok ? "PASS" : "FAIL", id, o.name.c_str(), o.detail.c_str());
    failures += o.ok ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failures, g_outcomes.size());
  return failures == 0 ? 0 : 1;
}
