#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "socialarm/robot_model.hpp"

namespace socialarm {

enum class Hand { left, right };

/// One tracked person at one tick.
struct SkeletonObservation {
  int person_id = 0;
  double t = 0.0;
  Vec3 torso_pos = Vec3::Zero();
  Vec3 torso_vel = Vec3::Zero();
  Vec3 left_hand_pos = Vec3::Zero();
  Vec3 right_hand_pos = Vec3::Zero();
  Vec3 left_hand_vel = Vec3::Zero();
  Vec3 right_hand_vel = Vec3::Zero();
  /// Vertical coordinate of the shoulder line, meters.
  double shoulder_height = 0.0;
  /// Hand-raised indicators as delivered by ingestion. Scripted sources set
  /// these from geometry; recorded sources debounce them.
  bool left_raised = false;
  bool right_raised = false;

  bool raised(Hand h) const { return h == Hand::left ? left_raised : right_raised; }
  const Vec3& hand_pos(Hand h) const { return h == Hand::left ? left_hand_pos : right_hand_pos; }
};

/// Geometric hand test: hand vertical coordinate strictly above the shoulder line.
bool hand_above_shoulder(const SkeletonObservation& obs, Hand hand);

/// Sets left_raised/right_raised from hand_above_shoulder.
SkeletonObservation with_geometric_hand_flags(SkeletonObservation obs);

bool is_finite(const SkeletonObservation& obs);

enum class TargetKind { idle, drift };

struct VirtualTarget {
  int target_id = 0;
  Vec3 pos = Vec3::Zero();
  double born_at = 0.0;
  double lifespan = 1.0;
  TargetKind kind = TargetKind::idle;

  bool expired(double t) const { return t - born_at >= lifespan; }
};

/// Axis-aligned box people must stay inside.
struct Workspace {
  Vec3 min{-5.0, -5.0, 0.0};
  Vec3 max{5.0, 5.0, 3.0};

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

/// Simple body geometry used to derive hands and shoulders from a scripted
/// torso trajectory.
struct BodyModel {
  double shoulder_offset = 0.30;   // shoulder line above torso center
  double hip_offset = -0.25;       // lowered hands, relative to torso center
  double hand_lateral = 0.20;      // hands sit +/- this along world y
  double raise_clearance = 0.15;   // raised hand height above shoulder line
  double head_offset = 0.15;       // gaze point above shoulder line
};

/// Point the robot looks at when attending a person (roughly the face).
Vec3 gaze_point(const SkeletonObservation& obs, const BodyModel& body = {});

/// Hand position for a torso position: lowered at hip height, raised above
/// the shoulder line by raise_clearance, offset laterally along world y.
Vec3 hand_position(const Vec3& torso, Hand hand, bool raised, const BodyModel& body = {});

struct WorldState {
  std::int64_t tick = 0;
  double time = 0.0;
  std::vector<SkeletonObservation> persons;
  std::vector<VirtualTarget> virtual_targets;
  JointPose robot_pose;
  Vec3 robot_base = Vec3::Zero();
};

nlohmann::json observation_to_json(const SkeletonObservation& obs);
/// Parses one recorded-stream line. Hand flags are left geometric; callers
/// that debounce overwrite them.
SkeletonObservation observation_from_json(const nlohmann::json& j, const std::string& where);

const char* to_string(TargetKind kind);
const char* to_string(Hand hand);

}  // namespace socialarm
