#pragma once

#include <cmath>
#include <vector>

#include "socialarm/attention.hpp"
#include "socialarm/harness.hpp"
#include "socialarm/scenario.hpp"

namespace testing_support {

using namespace socialarm;

inline AgentScript static_agent(int id, const Vec3& pos) {
  AgentScript a;
  a.id = id;
  a.waypoints = {{0.0, pos}};
  return a;
}

inline Scenario base_scenario(double duration, double arousal, AttentionMode mode, std::uint64_t seed = 1) {
  Scenario s;
  s.seed = seed;
  s.duration_s = duration;
  s.condition = {arousal, mode};
  return s;
}

inline SkeletonObservation person(int id, const Vec3& torso, bool left = false, bool right = false,
                                  const BodyModel& body = {}) {
  SkeletonObservation o;
  o.person_id = id;
  o.torso_pos = torso;
  o.shoulder_height = torso.z() + body.shoulder_offset;
  o.left_hand_pos = hand_position(torso, Hand::left, left, body);
  o.right_hand_pos = hand_position(torso, Hand::right, right, body);
  return with_geometric_hand_flags(o);
}

inline double deg(double rad) { return rad * 180.0 / std::acos(-1.0); }

}  // namespace testing_support
