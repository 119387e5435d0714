#pragma once

#include <cmath>
#include <string>

#include "json.hpp"
#include "socialarm/errors.hpp"
#include "socialarm/robot_model.hpp"

namespace socialarm::detail {

using nlohmann::json;

inline std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

inline std::string index(const std::string& where, std::size_t i) {
  return where + "[" + std::to_string(i) + "]";
}

inline double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ValidationError(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(where, "expected a finite number");
  return v;
}

inline long long as_integer(const json& j, const std::string& where) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) throw ValidationError(where, "expected an integer");
  return j.get<long long>();
}

inline std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw ValidationError(where, "expected a string");
  return j.get<std::string>();
}

inline bool as_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ValidationError(where, "expected a boolean");
  return j.get<bool>();
}

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(join(where, key), "missing required field");
  return *it;
}

inline void read_number(const json& j, const char* key, double& out, const std::string& where) {
  if (auto it = j.find(key); it != j.end()) out = as_number(*it, join(where, key));
}

inline void read_int(const json& j, const char* key, int& out, const std::string& where) {
  if (auto it = j.find(key); it != j.end()) out = static_cast<int>(as_integer(*it, join(where, key)));
}

inline Vec3 as_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(where, "expected an array of 3 numbers");
  return {as_number(j[0], index(where, 0)), as_number(j[1], index(where, 1)), as_number(j[2], index(where, 2))};
}

inline JointVector as_joint_vector(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != kJointCount) throw ValidationError(where, "expected an array of 6 numbers");
  JointVector v;
  for (int i = 0; i < kJointCount; ++i) v[i] = as_number(j[i], index(where, i));
  return v;
}

inline json to_array(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline json to_array(const JointVector& v) {
  json a = json::array();
  for (int i = 0; i < kJointCount; ++i) a.push_back(v[i]);
  return a;
}

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (!k.empty() && k[0] == '_') continue;  // comment fields
    bool found = false;
    for (const char* name : known) found = found || k == name;
    if (!found) throw ValidationError(join(where, k), "unknown field");
  }
}

}  // namespace socialarm::detail
