#include "socialarm/motion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json_util.hpp"

namespace socialarm {

using detail::join;
using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double lerp(double a, double b, double s) { return a + (b - a) * s; }

using TaskJacobian = Eigen::Matrix<double, Eigen::Dynamic, kJointCount, 0, 4, kJointCount>;

}  // namespace

void MotionConfig::validate(const std::string& where) const {
  if (!(speed_scale_low > 0.0 && speed_scale_high >= speed_scale_low && speed_scale_high <= 1.0)) {
    throw ValidationError(join(where, "speed_scale_low"), "need 0 < low <= high <= 1");
  }
  if (!(reach_scale_high >= reach_scale_low)) throw ValidationError(join(where, "reach_scale_high"), "must be >= low");
  if (!(breath_amplitude_low >= 0.0 && breath_amplitude_high >= breath_amplitude_low)) {
    throw ValidationError(join(where, "breath_amplitude_high"), "need 0 <= low <= high");
  }
  if (!(breath_frequency >= 0.0)) throw ValidationError(join(where, "breath_frequency"), "must be >= 0");
  if (!(proximal_weight > 0.0 && distal_weight > 0.0)) throw ValidationError(join(where, "proximal_weight"), "weights must be > 0");
  if (max_iters < 1) throw ValidationError(join(where, "max_iters"), "must be >= 1");
  if (!(damping >= 0.0)) throw ValidationError(join(where, "damping"), "must be >= 0");
  if (!(max_step > 0.0)) throw ValidationError(join(where, "max_step"), "must be > 0");
  if (!(posture_gain >= 0.0 && posture_gain <= 1.0)) throw ValidationError(join(where, "posture_gain"), "must be in [0, 1]");
  if (!(saturation_deg > 0.0)) throw ValidationError(join(where, "saturation_deg"), "must be > 0");
  if (!(exclusion_radius >= 0.0)) throw ValidationError(join(where, "exclusion_radius"), "must be >= 0");
  if (!(standoff_distance >= exclusion_radius)) {
    throw ValidationError(join(where, "standoff_distance"), "must be >= exclusion_radius");
  }
  if (!(standoff_gain >= 0.0 && standoff_gain <= 1.0)) throw ValidationError(join(where, "standoff_gain"), "must be in [0, 1]");
  if (!(glance_duration > 0.0)) throw ValidationError(join(where, "glance_duration"), "must be > 0");
  if (!(glance_cooldown >= 0.0)) throw ValidationError(join(where, "glance_cooldown"), "must be >= 0");
  if (!(idle_period > 0.0)) throw ValidationError(join(where, "idle_period"), "must be > 0");
}

ArousalProfile arousal_profile(double level, const MotionConfig& cfg) {
  if (!(level >= 1.0 && level <= 10.0)) throw ValidationError("arousal", "must be in [1, 10]");
  const double s = (level - 1.0) / 9.0;
  ArousalProfile p;
  p.level = level;
  p.speed_scale = lerp(cfg.speed_scale_low, cfg.speed_scale_high, s);
  p.posture_blend = s;
  p.reach_scale = lerp(cfg.reach_scale_low, cfg.reach_scale_high, s);
  p.breath_amplitude = lerp(cfg.breath_amplitude_low, cfg.breath_amplitude_high, s);
  p.breath_frequency = cfg.breath_frequency;
  return p;
}

GazeCommand resolve_gaze(const std::optional<GazeCommand>& primary, std::span<const GazeCommand> glances,
                         std::span<const VirtualTarget> drift_targets, const VirtualTarget& idle_target,
                         AttentionMode mode, double now) {
  const bool persons = mode == AttentionMode::high;
  if (persons) {
    for (const auto& g : glances) {
      if (g.active(now)) return g;
    }
  }
  for (const auto& v : drift_targets) {
    if (v.kind == TargetKind::drift && !v.expired(now)) {
      return GazeCommand{v.pos, GazePriority::drift, v.born_at + v.lifespan, v.target_id};
    }
  }
  if (persons && primary && primary->active(now)) return *primary;
  return GazeCommand{idle_target.pos, GazePriority::idle, std::nullopt, idle_target.target_id};
}

std::vector<GazeCommand> schedule_glance(std::span<const SkeletonObservation> prev,
                                         std::span<const SkeletonObservation> cur, std::optional<int> attended,
                                         double now, const MotionConfig& cfg, GlanceCooldowns& cooldowns) {
  std::vector<GazeCommand> out;
  for (const auto& c : cur) {
    if (attended == c.person_id) continue;
    auto p = std::find_if(prev.begin(), prev.end(), [&](const auto& o) { return o.person_id == c.person_id; });
    if (p == prev.end()) continue;
    const bool left_edge = c.left_raised && !p->left_raised;
    const bool right_edge = c.right_raised && !p->right_raised;
    if (!left_edge && !right_edge) continue;
    if (auto it = cooldowns.find(c.person_id); it != cooldowns.end() && now - it->second < cfg.glance_cooldown) {
      continue;
    }
    cooldowns[c.person_id] = now;
    const Vec3& hand = left_edge ? c.left_hand_pos : c.right_hand_pos;
    out.push_back(GazeCommand{hand, GazePriority::glance, now + cfg.glance_duration, c.person_id});
  }
  return out;
}

double gaze_error(const RobotModel& model, const JointPose& pose, const Vec3& target) {
  const Transform ee = forward_kinematics(model, pose);
  const Vec3 z = gaze_direction(model, ee);
  const Vec3 to = target - ee.translation();
  const double n = to.norm();
  if (n == 0.0) return 0.0;
  const Vec3 b = to / n;
  return std::atan2(z.cross(b).norm(), z.dot(b));
}

GazeSolution solve_gaze_pose(const RobotModel& model, const JointPose& current, const Vec3& target,
                             const ArousalProfile& profile, const MotionConfig& cfg, const JointVector& bias) {
  GazeSolution sol;
  sol.setpoint = current;
  if (!target.allFinite()) return sol;

  const JointVector posture = blend_posture(model, profile.posture_blend).q;
  const double pull = std::clamp(cfg.posture_gain * profile.reach_scale, 0.0, 1.0);
  const double tol = cfg.converge_tol_deg * kDeg;

  JointVector inv_w2;
  for (int i = 0; i < kJointCount; ++i) {
    const double w = i < 3 ? cfg.proximal_weight : cfg.distal_weight;
    inv_w2[i] = 1.0 / (w * w);
  }

  JointVector q = current.q;
  JointVector free_mask = JointVector::Ones();
  double angle = 0.0;
  int it = 0;
  for (;; ++it) {
    const auto frames = joint_frames(model, JointPose{q + bias});
    const Vec3 p = frames[kJointCount].translation();
    const Vec3 z = gaze_direction(model, frames[kJointCount]);
    const Vec3 to = target - p;
    const double dist = to.norm();
    if (it == 0 && dist < cfg.exclusion_radius) {
      sol.error_rad = dist > 0.0 ? std::atan2(z.cross(to).norm(), z.dot(to)) : 0.0;
      return sol;
    }
    const Vec3 b = to / dist;
    const Vec3 cross = z.cross(b);
    angle = std::atan2(cross.norm(), z.dot(b));
    const bool standing_off = dist >= cfg.standoff_distance - 1e-3;
    if ((angle < tol && (standing_off || it == 0)) || it >= cfg.max_iters) break;

    Vec3 axis;
    if (cross.norm() > 1e-12) {
      axis = cross.normalized();
    } else {
      axis = z.unitOrthogonal();
    }
    const Vec3 err = angle * axis;

    const Eigen::Matrix3d perp_z = Eigen::Matrix3d::Identity() - z * z.transpose();
    const Eigen::Matrix3d perp_b = Eigen::Matrix3d::Identity() - b * b.transpose();
    const bool too_close = dist < cfg.standoff_distance;
    const int rows = too_close ? 4 : 3;
    TaskJacobian jac(rows, kJointCount);
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1> task(rows);
    task.head<3>() = err;
    for (int i = 0; i < kJointCount; ++i) {
      const Vec3 k = frames[i].linear().col(2);
      const Vec3 jp = k.cross(p - frames[i].translation());
      const Vec3 db = -(perp_b * jp) / dist;
      jac.block<3, 1>(0, i) = perp_z * (k - b.cross(db));
      // Row 4: rate of change of the end-effector-to-target distance.
      if (too_close) jac(3, i) = -b.dot(jp);
    }
    if (too_close) task(3) = cfg.standoff_gain * (cfg.standoff_distance - dist);

    const JointVector winv = inv_w2.cwiseProduct(free_mask);
    const Eigen::Matrix<double, kJointCount, Eigen::Dynamic, 0, kJointCount, 4> wjt =
        winv.asDiagonal() * jac.transpose();
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4> a =
        jac * wjt + cfg.damping * cfg.damping * Eigen::MatrixXd::Identity(rows, rows);
    const Eigen::Matrix<double, kJointCount, Eigen::Dynamic, 0, kJointCount, 4> pinv = wjt * a.inverse();

    JointVector dq = pinv * task;
    const Eigen::Matrix<double, kJointCount, kJointCount> null =
        Eigen::Matrix<double, kJointCount, kJointCount>::Identity() - pinv * jac;
    dq += null * (pull * (posture - q).cwiseProduct(free_mask));

    const double peak = dq.cwiseAbs().maxCoeff();
    if (peak > cfg.max_step) dq *= cfg.max_step / peak;

    q += dq;
    for (int i = 0; i < kJointCount; ++i) {
      if (q[i] < model.limits[i].min || q[i] > model.limits[i].max) {
        q[i] = std::clamp(q[i], model.limits[i].min, model.limits[i].max);
        free_mask[i] = 0.0;
      }
    }
  }

  sol.iterations = it;
  sol.error_rad = angle;
  sol.saturated = angle > cfg.saturation_deg * kDeg;
  if (it > 0) sol.setpoint = JointPose{q};
  return sol;
}

JointVector breath_offset(const ArousalProfile& profile, const RobotModel& model, double t) {
  const double s = std::sin(2.0 * std::numbers::pi * profile.breath_frequency * t);
  return profile.breath_amplitude * s * model.breath_mask;
}

MotionStep step_motion(const JointPose& current, const JointPose& setpoint, const ArousalProfile& profile,
                       const RobotModel& model, double t, double dt) {
  // Uniform scaling keeps the step on the straight joint-space line to the
  // setpoint, so the solver's joint distribution survives rate limiting.
  const JointVector delta = setpoint.q - current.q;
  double scale = 1.0;
  for (int i = 0; i < kJointCount; ++i) {
    const double max_delta = profile.speed_scale * model.velocity_limits[i] * dt;
    if (std::abs(delta[i]) > max_delta) scale = std::min(scale, max_delta / std::abs(delta[i]));
  }
  MotionStep out;
  out.commanded = clamp_to_limits(model, JointPose{current.q + scale * delta});
  out.emitted = clamp_to_limits(model, JointPose{out.commanded.q + breath_offset(profile, model, t)});
  return out;
}

MotionConfig motion_config_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where, "expected an object");
  detail::reject_unknown_keys(
      j,
      {"speed_scale_low", "speed_scale_high", "reach_scale_low", "reach_scale_high", "breath_amplitude_low",
       "breath_amplitude_high", "breath_frequency", "proximal_weight", "distal_weight", "max_iters", "damping",
       "max_step", "posture_gain", "converge_tol_deg", "saturation_deg", "exclusion_radius", "standoff_distance", "standoff_gain", "glance_duration",
       "glance_cooldown", "idle_period"},
      where);
  MotionConfig c;
  detail::read_number(j, "speed_scale_low", c.speed_scale_low, where);
  detail::read_number(j, "speed_scale_high", c.speed_scale_high, where);
  detail::read_number(j, "reach_scale_low", c.reach_scale_low, where);
  detail::read_number(j, "reach_scale_high", c.reach_scale_high, where);
  detail::read_number(j, "breath_amplitude_low", c.breath_amplitude_low, where);
  detail::read_number(j, "breath_amplitude_high", c.breath_amplitude_high, where);
  detail::read_number(j, "breath_frequency", c.breath_frequency, where);
  detail::read_number(j, "proximal_weight", c.proximal_weight, where);
  detail::read_number(j, "distal_weight", c.distal_weight, where);
  detail::read_int(j, "max_iters", c.max_iters, where);
  detail::read_number(j, "damping", c.damping, where);
  detail::read_number(j, "max_step", c.max_step, where);
  detail::read_number(j, "posture_gain", c.posture_gain, where);
  detail::read_number(j, "converge_tol_deg", c.converge_tol_deg, where);
  detail::read_number(j, "saturation_deg", c.saturation_deg, where);
  detail::read_number(j, "exclusion_radius", c.exclusion_radius, where);
  detail::read_number(j, "standoff_distance", c.standoff_distance, where);
  detail::read_number(j, "standoff_gain", c.standoff_gain, where);
  detail::read_number(j, "glance_duration", c.glance_duration, where);
  detail::read_number(j, "glance_cooldown", c.glance_cooldown, where);
  detail::read_number(j, "idle_period", c.idle_period, where);
  c.validate(where);
  return c;
}

json to_json(const MotionConfig& c) {
  return {{"speed_scale_low", c.speed_scale_low},
          {"speed_scale_high", c.speed_scale_high},
          {"reach_scale_low", c.reach_scale_low},
          {"reach_scale_high", c.reach_scale_high},
          {"breath_amplitude_low", c.breath_amplitude_low},
          {"breath_amplitude_high", c.breath_amplitude_high},
          {"breath_frequency", c.breath_frequency},
          {"proximal_weight", c.proximal_weight},
          {"distal_weight", c.distal_weight},
          {"max_iters", c.max_iters},
          {"damping", c.damping},
          {"max_step", c.max_step},
          {"posture_gain", c.posture_gain},
          {"converge_tol_deg", c.converge_tol_deg},
          {"saturation_deg", c.saturation_deg},
          {"exclusion_radius", c.exclusion_radius},
          {"standoff_distance", c.standoff_distance},
          {"standoff_gain", c.standoff_gain},
          {"glance_duration", c.glance_duration},
          {"glance_cooldown", c.glance_cooldown},
          {"idle_period", c.idle_period}};
}

const char* to_string(GazePriority p) {
  switch (p) {
    case GazePriority::primary: return "primary";
    case GazePriority::glance: return "glance";
    case GazePriority::drift: return "drift";
    case GazePriority::idle: return "idle";
  }
  return "idle";
}

}  // namespace socialarm
