#pragma once

#include <array>
#include <string>

#include <Eigen/Geometry>

#include "json.hpp"

namespace socialarm {

inline constexpr int kJointCount = 6;
using JointVector = Eigen::Matrix<double, kJointCount, 1>;
using Vec3 = Eigen::Vector3d;
using Transform = Eigen::Isometry3d;

/// Six joint angles in radians.
struct JointPose {
  JointVector q = JointVector::Zero();

  bool operator==(const JointPose& other) const { return q == other.q; }
};

/// One row of a standard (distal) Denavit-Hartenberg table:
/// T = Rz(theta + theta_offset) * Tz(d) * Tx(a) * Rx(alpha).
struct DhRow {
  double a = 0.0;
  double d = 0.0;
  double alpha = 0.0;
  double theta_offset = 0.0;
};

struct JointLimit {
  double min = 0.0;
  double max = 0.0;
};

struct RobotModel {
  std::string name;
  std::array<DhRow, kJointCount> dh{};
  std::array<JointLimit, kJointCount> limits{};
  JointVector velocity_limits = JointVector::Ones();
  Transform base_pose = Transform::Identity();
  /// Gaze direction expressed in the end-effector frame; unit norm.
  Vec3 gaze_axis = Vec3::UnitZ();
  JointPose hunched;
  JointPose upright;
  /// Per-joint breathing weight s_j.
  JointVector breath_mask = JointVector::Zero();

  Vec3 base_position() const { return base_pose.translation(); }

  /// Upper bound on the distance from the base origin to the flange.
  double reach_radius() const;

  /// Throws ValidationError when limits are inverted, velocity limits are
  /// not positive, presets fall outside the limits or the gaze axis is not
  /// unit length.
  void validate(const std::string& where = "robot") const;
};

/// Link transform for a single DH row at joint angle q.
Transform dh_transform(const DhRow& row, double q);

/// World-frame end-effector transform: base_pose * A1(q1) * ... * A6(q6).
Transform forward_kinematics(const RobotModel& model, const JointPose& pose);

/// World-frame frames 0..6; frame i-1 carries the rotation axis (z) and
/// origin of joint i, frame 6 is the end effector.
std::array<Transform, kJointCount + 1> joint_frames(const RobotModel& model, const JointPose& pose);

/// Unit gaze direction of the end effector in the world frame.
Vec3 gaze_direction(const RobotModel& model, const Transform& end_effector);

bool within_limits(const RobotModel& model, const JointPose& pose, double slack = 0.0);
JointPose clamp_to_limits(const RobotModel& model, const JointPose& pose);

/// Linear blend of the two posture presets, 0 = hunched, 1 = upright.
JointPose blend_posture(const RobotModel& model, double blend);

RobotModel robot_model_from_json(const nlohmann::json& j, const std::string& where = "robot");
nlohmann::json robot_model_to_json(const RobotModel& model);
RobotModel load_robot_model(const std::string& path);

/// Bundled UR5e-like configuration (config/ur5e.json, embedded at build time).
const RobotModel& default_robot_model();

}  // namespace socialarm
