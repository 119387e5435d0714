#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "socialarm/attention.hpp"
#include "socialarm/robot_model.hpp"
#include "socialarm/scene.hpp"

namespace socialarm {

struct MotionConfig {
  // Arousal endpoints (level 1 -> level 10), interpolated linearly.
  double speed_scale_low = 0.2;
  double speed_scale_high = 1.0;
  double reach_scale_low = 0.6;
  double reach_scale_high = 1.0;
  double breath_amplitude_low = 0.01;   // rad
  double breath_amplitude_high = 0.035; // rad
  double breath_frequency = 0.25;       // Hz

  // Gaze solver.
  double proximal_weight = 10.0;  // joints 1-3
  double distal_weight = 1.0;     // joints 4-6
  int max_iters = 50;
  double damping = 0.05;
  double max_step = 0.25;         // rad per solver iteration
  double posture_gain = 0.1;      // null-space pull per iteration, before reach scaling
  double converge_tol_deg = 0.05;
  double saturation_deg = 2.0;
  double exclusion_radius = 0.05; // m
  /// Closer targets add a task that backs the end effector away.
  double standoff_distance = 0.2; // m
  double standoff_gain = 0.5;

  // Glances and idle targets.
  double glance_duration = 0.7;
  double glance_cooldown = 3.0;
  double idle_period = 4.0;

  void validate(const std::string& where = "motion") const;
};

struct ArousalProfile {
  double level = 1.0;
  double speed_scale = 0.2;
  double posture_blend = 0.0;
  double reach_scale = 0.6;
  double breath_amplitude = 0.01;
  double breath_frequency = 0.25;
};

/// Linear interpolation of the configured endpoints over level in [1, 10].
/// Throws ValidationError outside that range.
ArousalProfile arousal_profile(double level, const MotionConfig& cfg = {});

enum class GazePriority { primary, glance, drift, idle };

struct GazeCommand {
  Vec3 target_pos = Vec3::Zero();
  GazePriority priority = GazePriority::idle;
  std::optional<double> expires_at;
  /// Person id for primary/glance, virtual target id for drift/idle.
  int target_id = 0;

  bool active(double now) const { return !expires_at || now < *expires_at; }
  bool person_targeted() const { return priority == GazePriority::primary || priority == GazePriority::glance; }
};

/// Glance > drift > primary > idle. Low attention mode drops every
/// person-derived command (primary and glances). Expired commands are skipped.
GazeCommand resolve_gaze(const std::optional<GazeCommand>& primary, std::span<const GazeCommand> glances,
                         std::span<const VirtualTarget> drift_targets, const VirtualTarget& idle_target,
                         AttentionMode mode, double now);

/// Per-person time of the last emitted glance.
using GlanceCooldowns = std::map<int, double>;

/// Emits one glance per non-attended person whose left or right hand flag
/// rises between the two ticks, unless that person glanced within the
/// cooldown. The glance targets the hand that rose (left first).
std::vector<GazeCommand> schedule_glance(std::span<const SkeletonObservation> prev,
                                         std::span<const SkeletonObservation> cur, std::optional<int> attended,
                                         double now, const MotionConfig& cfg, GlanceCooldowns& cooldowns);

struct GazeSolution {
  JointPose setpoint;
  bool saturated = false;
  double error_rad = 0.0;
  int iterations = 0;
};

/// Points the gaze axis at target with a weighted damped least-squares
/// iteration. Proximal joints cost proximal_weight^2 per rad^2 against
/// distal_weight^2, and a null-space term pulls toward the arousal posture.
/// `bias` is a joint offset applied on top of the solved pose before
/// forward kinematics (the breathing term the pose will carry), so the wrist
/// absorbs it. Targets nearer than standoff_distance add a fourth task row
/// that backs the end effector away. Targets inside the exclusion ball
/// return `current` unchanged.
GazeSolution solve_gaze_pose(const RobotModel& model, const JointPose& current, const Vec3& target,
                             const ArousalProfile& profile, const MotionConfig& cfg = {},
                             const JointVector& bias = JointVector::Zero());

/// breath_amplitude * mask_j * sin(2 pi f t).
JointVector breath_offset(const ArousalProfile& profile, const RobotModel& model, double t);

struct MotionStep {
  JointPose commanded;  // rate limited, no breathing
  JointPose emitted;    // commanded + breathing, clamped to limits
};

MotionStep step_motion(const JointPose& current, const JointPose& setpoint, const ArousalProfile& profile,
                       const RobotModel& model, double t, double dt);

/// Angle between the gaze axis at `pose` and the bearing from the end
/// effector to `target`, radians.
double gaze_error(const RobotModel& model, const JointPose& pose, const Vec3& target);

MotionConfig motion_config_from_json(const nlohmann::json& j, const std::string& where = "motion");
nlohmann::json to_json(const MotionConfig& cfg);

const char* to_string(GazePriority p);

}  // namespace socialarm
