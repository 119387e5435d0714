#include "socialarm/robot_model.hpp"

#include <cmath>
#include <fstream>

#include "json_util.hpp"

namespace socialarm {

namespace {
#include "embedded_ur5e.inc"
}  // namespace

using detail::as_joint_vector;
using detail::as_number;
using detail::as_vec3;
using detail::index;
using detail::join;
using detail::require;
using nlohmann::json;

double RobotModel::reach_radius() const {
  double r = 0.0;
  for (const auto& row : dh) r += std::hypot(row.a, row.d);
  return r;
}

void RobotModel::validate(const std::string& where) const {
  for (int i = 0; i < kJointCount; ++i) {
    if (!(limits[i].min < limits[i].max)) {
      throw ValidationError(index(join(where, "joint_limits"), i), "min must be < max");
    }
    if (!(velocity_limits[i] > 0.0)) {
      throw ValidationError(index(join(where, "joint_velocity_limits"), i), "must be > 0");
    }
  }
  if (std::abs(gaze_axis.norm() - 1.0) > 1e-9) throw ValidationError(join(where, "gaze_axis"), "must have unit norm");
  if (!within_limits(*this, hunched)) throw ValidationError(join(where, "presets.hunched"), "outside joint limits");
  if (!within_limits(*this, upright)) throw ValidationError(join(where, "presets.upright"), "outside joint limits");
}

Transform dh_transform(const DhRow& row, double q) {
  const double theta = q + row.theta_offset;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  Transform t = Transform::Identity();
  auto& m = t.matrix();
  m << ct, -st * ca, st * sa, row.a * ct,
       st, ct * ca, -ct * sa, row.a * st,
       0.0, sa, ca, row.d,
       0.0, 0.0, 0.0, 1.0;
  return t;
}

Transform forward_kinematics(const RobotModel& model, const JointPose& pose) {
  Transform t = model.base_pose;
  for (int i = 0; i < kJointCount; ++i) t = t * dh_transform(model.dh[i], pose.q[i]);
  return t;
}

std::array<Transform, kJointCount + 1> joint_frames(const RobotModel& model, const JointPose& pose) {
  std::array<Transform, kJointCount + 1> frames;
  frames[0] = model.base_pose;
  for (int i = 0; i < kJointCount; ++i) frames[i + 1] = frames[i] * dh_transform(model.dh[i], pose.q[i]);
  return frames;
}

Vec3 gaze_direction(const RobotModel& model, const Transform& end_effector) {
  return (end_effector.linear() * model.gaze_axis).normalized();
}

bool within_limits(const RobotModel& model, const JointPose& pose, double slack) {
  for (int i = 0; i < kJointCount; ++i) {
    if (pose.q[i] < model.limits[i].min - slack || pose.q[i] > model.limits[i].max + slack) return false;
  }
  return true;
}

JointPose clamp_to_limits(const RobotModel& model, const JointPose& pose) {
  JointPose out = pose;
  for (int i = 0; i < kJointCount; ++i) out.q[i] = std::clamp(pose.q[i], model.limits[i].min, model.limits[i].max);
  return out;
}

JointPose blend_posture(const RobotModel& model, double blend) {
  return JointPose{model.hunched.q + blend * (model.upright.q - model.hunched.q)};
}

RobotModel robot_model_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where, "expected an object");
  detail::reject_unknown_keys(
      j, {"name", "dh", "joint_limits", "joint_velocity_limits", "base_pose", "gaze_axis", "presets", "breath_mask"}, where);
  RobotModel m;
  if (auto it = j.find("name"); it != j.end()) m.name = detail::as_string(*it, join(where, "name"));

  const std::string dh_where = join(where, "dh");
  const json& dh = require(j, "dh", where);
  if (!dh.is_array() || dh.size() != kJointCount) throw ValidationError(dh_where, "expected 6 rows");
  for (int i = 0; i < kJointCount; ++i) {
    const std::string row_where = index(dh_where, i);
    const json& row = dh[i];
    m.dh[i].a = as_number(require(row, "a", row_where), join(row_where, "a"));
    m.dh[i].d = as_number(require(row, "d", row_where), join(row_where, "d"));
    m.dh[i].alpha = as_number(require(row, "alpha", row_where), join(row_where, "alpha"));
    detail::read_number(row, "theta_offset", m.dh[i].theta_offset, row_where);
  }

  const std::string lim_where = join(where, "joint_limits");
  const json& lim = require(j, "joint_limits", where);
  if (!lim.is_array() || lim.size() != kJointCount) throw ValidationError(lim_where, "expected 6 [min, max] pairs");
  for (int i = 0; i < kJointCount; ++i) {
    const std::string w = index(lim_where, i);
    if (!lim[i].is_array() || lim[i].size() != 2) throw ValidationError(w, "expected [min, max]");
    m.limits[i] = {as_number(lim[i][0], w), as_number(lim[i][1], w)};
  }

  m.velocity_limits = as_joint_vector(require(j, "joint_velocity_limits", where), join(where, "joint_velocity_limits"));

  if (auto it = j.find("base_pose"); it != j.end()) {
    const std::string w = join(where, "base_pose");
    Vec3 translation = Vec3::Zero(), rpy = Vec3::Zero();
    if (auto t = it->find("translation"); t != it->end()) translation = as_vec3(*t, join(w, "translation"));
    if (auto r = it->find("rpy"); r != it->end()) rpy = as_vec3(*r, join(w, "rpy"));
    m.base_pose = Transform::Identity();
    m.base_pose.translate(translation);
    m.base_pose.rotate(Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                       Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()));
  }
  if (auto it = j.find("gaze_axis"); it != j.end()) m.gaze_axis = as_vec3(*it, join(where, "gaze_axis"));

  const std::string pw = join(where, "presets");
  const json& presets = require(j, "presets", where);
  m.hunched.q = as_joint_vector(require(presets, "hunched", pw), join(pw, "hunched"));
  m.upright.q = as_joint_vector(require(presets, "upright", pw), join(pw, "upright"));

  if (auto it = j.find("breath_mask"); it != j.end()) m.breath_mask = as_joint_vector(*it, join(where, "breath_mask"));

  m.validate(where);
  return m;
}

json robot_model_to_json(const RobotModel& m) {
  json dh = json::array();
  json lim = json::array();
  for (int i = 0; i < kJointCount; ++i) {
    dh.push_back({{"a", m.dh[i].a}, {"d", m.dh[i].d}, {"alpha", m.dh[i].alpha}, {"theta_offset", m.dh[i].theta_offset}});
    lim.push_back(json::array({m.limits[i].min, m.limits[i].max}));
  }
  const Vec3 rpy = m.base_pose.linear().eulerAngles(2, 1, 0);
  return {{"name", m.name},
          {"dh", dh},
          {"joint_limits", lim},
          {"joint_velocity_limits", detail::to_array(m.velocity_limits)},
          {"base_pose", {{"translation", detail::to_array(Vec3(m.base_pose.translation()))},
                         {"rpy", json::array({rpy[2], rpy[1], rpy[0]})}}},
          {"gaze_axis", detail::to_array(m.gaze_axis)},
          {"presets", {{"hunched", detail::to_array(m.hunched.q)}, {"upright", detail::to_array(m.upright.q)}}},
          {"breath_mask", detail::to_array(m.breath_mask)}};
}

RobotModel load_robot_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open robot config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path, std::string("invalid JSON: ") + e.what());
  }
  return robot_model_from_json(j, "robot");
}

const RobotModel& default_robot_model() {
  static const RobotModel model = robot_model_from_json(json::parse(kEmbeddedUr5eConfig), "robot");
  return model;
}

}  // namespace socialarm
