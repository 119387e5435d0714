#include "socialarm/scene.hpp"

#include "json_util.hpp"

namespace socialarm {

using detail::as_number;
using detail::as_vec3;
using detail::join;
using detail::require;
using detail::to_array;
using nlohmann::json;

bool hand_above_shoulder(const SkeletonObservation& obs, Hand hand) {
  return obs.hand_pos(hand).z() > obs.shoulder_height;
}

SkeletonObservation with_geometric_hand_flags(SkeletonObservation obs) {
  obs.left_raised = hand_above_shoulder(obs, Hand::left);
  obs.right_raised = hand_above_shoulder(obs, Hand::right);
  return obs;
}

bool is_finite(const SkeletonObservation& o) {
  return o.torso_pos.allFinite() && o.torso_vel.allFinite() && o.left_hand_pos.allFinite() &&
         o.right_hand_pos.allFinite() && o.left_hand_vel.allFinite() && o.right_hand_vel.allFinite() &&
         std::isfinite(o.shoulder_height) && std::isfinite(o.t);
}

Vec3 gaze_point(const SkeletonObservation& obs, const BodyModel& body) {
  return {obs.torso_pos.x(), obs.torso_pos.y(), obs.shoulder_height + body.head_offset};
}

Vec3 hand_position(const Vec3& torso, Hand hand, bool raised, const BodyModel& body) {
  const double shoulder = torso.z() + body.shoulder_offset;
  const double y = hand == Hand::left ? body.hand_lateral : -body.hand_lateral;
  const double z = raised ? shoulder + body.raise_clearance : torso.z() + body.hip_offset;
  return {torso.x(), torso.y() + y, z};
}

json observation_to_json(const SkeletonObservation& o) {
  return {{"person_id", o.person_id},
          {"t", o.t},
          {"torso_pos", to_array(o.torso_pos)},
          {"torso_vel", to_array(o.torso_vel)},
          {"left_hand_pos", to_array(o.left_hand_pos)},
          {"right_hand_pos", to_array(o.right_hand_pos)},
          {"left_hand_vel", to_array(o.left_hand_vel)},
          {"right_hand_vel", to_array(o.right_hand_vel)},
          {"shoulder_height", o.shoulder_height}};
}

SkeletonObservation observation_from_json(const json& j, const std::string& where) {
  SkeletonObservation o;
  o.person_id = static_cast<int>(detail::as_integer(require(j, "person_id", where), join(where, "person_id")));
  o.t = as_number(require(j, "t", where), join(where, "t"));
  o.torso_pos = as_vec3(require(j, "torso_pos", where), join(where, "torso_pos"));
  o.left_hand_pos = as_vec3(require(j, "left_hand_pos", where), join(where, "left_hand_pos"));
  o.right_hand_pos = as_vec3(require(j, "right_hand_pos", where), join(where, "right_hand_pos"));
  o.shoulder_height = as_number(require(j, "shoulder_height", where), join(where, "shoulder_height"));
  if (auto it = j.find("torso_vel"); it != j.end()) o.torso_vel = as_vec3(*it, join(where, "torso_vel"));
  if (auto it = j.find("left_hand_vel"); it != j.end()) o.left_hand_vel = as_vec3(*it, join(where, "left_hand_vel"));
  if (auto it = j.find("right_hand_vel"); it != j.end()) o.right_hand_vel = as_vec3(*it, join(where, "right_hand_vel"));
  return with_geometric_hand_flags(o);
}

const char* to_string(TargetKind kind) { return kind == TargetKind::idle ? "idle" : "drift"; }
const char* to_string(Hand hand) { return hand == Hand::left ? "left" : "right"; }

}  // namespace socialarm
