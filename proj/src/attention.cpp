#include "socialarm/attention.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"

namespace socialarm {

using detail::join;
using nlohmann::json;

void AttentionWeights::validate(const std::string& where) const {
  if (!(lambda > 0.0)) throw ValidationError(join(where, "lambda"), "must be > 0");
  if (!(v_max_torso > 0.0)) throw ValidationError(join(where, "v_max_torso"), "must be > 0");
  if (!(v_max_right > 0.0)) throw ValidationError(join(where, "v_max_right"), "must be > 0");
  if (!(v_max_left > 0.0)) throw ValidationError(join(where, "v_max_left"), "must be > 0");
  if (!(m_hab < 0.0)) throw ValidationError(join(where, "m_hab"), "must be < 0");
  if (!(m_rest > 0.0)) throw ValidationError(join(where, "m_rest"), "must be > 0");
  if (!(hysteresis_margin >= 0.0)) throw ValidationError(join(where, "hysteresis_margin"), "must be >= 0");
  if (!(eviction_horizon_s > 0.0)) throw ValidationError(join(where, "eviction_horizon_s"), "must be > 0");
}

double position_score(const SkeletonObservation& obs, const Vec3& robot_base, const AttentionWeights& w) {
  const double d = (obs.torso_pos - robot_base).norm();
  const int hands = static_cast<int>(obs.left_raised) + static_cast<int>(obs.right_raised);
  return w.w_proximity * std::exp(-w.lambda * d) + w.w_hand * hands;
}

double velocity_score(const SkeletonObservation& obs, const AttentionWeights& w) {
  auto ratio = [](const Vec3& v, double vmax) { return std::clamp(v.norm() / vmax, 0.0, 1.0); };
  return ratio(obs.torso_vel, w.v_max_torso) + ratio(obs.right_hand_vel, w.v_max_right) +
         ratio(obs.left_hand_vel, w.v_max_left);
}

AttentionState update_habituation(AttentionState state, const std::set<int>& present_ids, double dt,
                                  const AttentionWeights& w) {
  for (auto it = state.thetas.begin(); it != state.thetas.end();) {
    const int id = it->first;
    double& absent = state.absent_s[id];
    if (present_ids.contains(id)) {
      absent = 0.0;
    } else {
      absent += dt;
      if (absent >= w.eviction_horizon_s) {
        state.absent_s.erase(id);
        if (state.current_target == id) state.current_target.reset();
        it = state.thetas.erase(it);
        continue;
      }
    }
    const double gamma = state.current_target == id ? 1.0 : 0.0;
    it->second = std::clamp(it->second + (gamma * w.m_hab + (1.0 - gamma) * w.m_rest) * dt, 0.0, 1.0);
    ++it;
  }
  for (int id : present_ids) {
    if (state.thetas.emplace(id, 1.0).second) state.absent_s[id] = 0.0;
  }
  return state;
}

std::optional<int> select_target(std::span<const AttentionRecord> records, const AttentionState& state,
                                 const AttentionWeights& w) {
  const AttentionRecord* best = nullptr;
  const AttentionRecord* incumbent = nullptr;
  for (const auto& r : records) {
    if (!best || r.phi > best->phi || (r.phi == best->phi && r.person_id < best->person_id)) best = &r;
    if (state.current_target == r.person_id) incumbent = &r;
  }
  if (!best) return std::nullopt;
  if (incumbent && incumbent != best && !(best->phi > incumbent->phi + w.hysteresis_margin)) {
    return incumbent->person_id;
  }
  return best->person_id;
}

AttentionRecord score_person(const SkeletonObservation& obs, const Vec3& robot_base, double theta,
                             const AttentionWeights& w) {
  AttentionRecord r;
  r.person_id = obs.person_id;
  r.d = (obs.torso_pos - robot_base).norm();
  r.h_left = obs.left_raised;
  r.h_right = obs.right_raised;
  r.P = position_score(obs, robot_base, w);
  r.V = velocity_score(obs, w);
  r.theta = theta;
  r.phi = w.w_p * r.P + w.w_v * r.V + theta;
  return r;
}

AttentionStep step_attention(const WorldState& world, AttentionState state, const AttentionWeights& w, double dt,
                             AttentionMode mode) {
  AttentionStep out;
  std::set<int> present;
  for (const auto& obs : world.persons) {
    present.insert(obs.person_id);
    if (state.thetas.emplace(obs.person_id, 1.0).second) state.absent_s[obs.person_id] = 0.0;
  }

  out.records.reserve(world.persons.size());
  for (const auto& obs : world.persons) {
    out.records.push_back(score_person(obs, world.robot_base, state.thetas.at(obs.person_id), w));
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const AttentionRecord& a, const AttentionRecord& b) { return a.person_id < b.person_id; });

  std::optional<int> selected;
  if (mode == AttentionMode::high) selected = select_target(out.records, state, w);
  if (selected != state.current_target) {
    state.current_target = selected;
    state.last_switch_tick = world.tick;
  }

  out.state = update_habituation(std::move(state), present, dt, w);
  return out;
}

AttentionWeights attention_weights_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where, "expected an object");
  detail::reject_unknown_keys(j,
                              {"w_p", "w_v", "w_proximity", "w_hand", "lambda", "v_max_torso", "v_max_right",
                               "v_max_left", "v_max_hand", "m_hab", "m_rest", "hysteresis_margin",
                               "eviction_horizon_s"},
                              where);
  AttentionWeights w;
  detail::read_number(j, "w_p", w.w_p, where);
  detail::read_number(j, "w_v", w.w_v, where);
  detail::read_number(j, "w_proximity", w.w_proximity, where);
  detail::read_number(j, "w_hand", w.w_hand, where);
  detail::read_number(j, "lambda", w.lambda, where);
  detail::read_number(j, "v_max_torso", w.v_max_torso, where);
  if (auto it = j.find("v_max_hand"); it != j.end()) {
    w.v_max_right = w.v_max_left = detail::as_number(*it, join(where, "v_max_hand"));
  }
  detail::read_number(j, "v_max_right", w.v_max_right, where);
  detail::read_number(j, "v_max_left", w.v_max_left, where);
  detail::read_number(j, "m_hab", w.m_hab, where);
  detail::read_number(j, "m_rest", w.m_rest, where);
  detail::read_number(j, "hysteresis_margin", w.hysteresis_margin, where);
  detail::read_number(j, "eviction_horizon_s", w.eviction_horizon_s, where);
  w.validate(where);
  return w;
}

json to_json(const AttentionWeights& w) {
  return {{"w_p", w.w_p},
          {"w_v", w.w_v},
          {"w_proximity", w.w_proximity},
          {"w_hand", w.w_hand},
          {"lambda", w.lambda},
          {"v_max_torso", w.v_max_torso},
          {"v_max_right", w.v_max_right},
          {"v_max_left", w.v_max_left},
          {"m_hab", w.m_hab},
          {"m_rest", w.m_rest},
          {"hysteresis_margin", w.hysteresis_margin},
          {"eviction_horizon_s", w.eviction_horizon_s}};
}

json to_json(const AttentionRecord& r) {
  return {{"person_id", r.person_id}, {"P", r.P},     {"V", r.V},           {"theta", r.theta},
          {"phi", r.phi},             {"d", r.d},     {"h_left", r.h_left}, {"h_right", r.h_right}};
}

const char* to_string(AttentionMode mode) { return mode == AttentionMode::low ? "low" : "high"; }

std::optional<AttentionMode> attention_mode_from_string(const std::string& s) {
  if (s == "low") return AttentionMode::low;
  if (s == "high") return AttentionMode::high;
  return std::nullopt;
}

}  // namespace socialarm
