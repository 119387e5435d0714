#include "socialarm/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json_util.hpp"

namespace socialarm {

namespace {
#include "embedded_demo.inc"
}  // namespace

using detail::as_integer;
using detail::as_number;
using detail::as_string;
using detail::as_vec3;
using detail::index;
using detail::join;
using detail::require;
using nlohmann::json;

namespace {
constexpr double kTimeEps = 1e-9;
}  // namespace

const std::array<ConditionPreset, 4>& condition_presets() {
  static const std::array<ConditionPreset, 4> presets{{
      {"low_arousal_low_attention", {kArousalLow, AttentionMode::low}},
      {"low_arousal_high_attention", {kArousalLow, AttentionMode::high}},
      {"high_arousal_low_attention", {kArousalHigh, AttentionMode::low}},
      {"high_arousal_high_attention", {kArousalHigh, AttentionMode::high}},
  }};
  return presets;
}

Vec3 AgentScript::torso_at(double t) const {
  if (waypoints.empty()) return Vec3::Zero();
  if (t <= waypoints.front().t) return waypoints.front().pos;
  if (t >= waypoints.back().t) return waypoints.back().pos;
  auto hi = std::upper_bound(waypoints.begin(), waypoints.end(), t,
                             [](double v, const Waypoint& w) { return v < w.t; });
  auto lo = hi - 1;
  const double s = (t - lo->t) / (hi->t - lo->t);
  return lo->pos + s * (hi->pos - lo->pos);
}

bool AgentScript::hand_raised_at(Hand hand, double t) const {
  bool raised = false;
  for (const auto& e : hand_events) {
    if (e.t > t + kTimeEps) break;
    if (e.hand == hand) raised = e.raise;
  }
  return raised;
}

bool AgentScript::active_at(double t) const {
  return t + kTimeEps >= enter_s && (!exit_s || t < *exit_s - kTimeEps);
}

std::int64_t Scenario::tick_count() const { return static_cast<std::int64_t>(std::llround(duration_s / dt)); }

std::vector<SkeletonObservation> ingest_scenario_tick(const Scenario& s, std::int64_t tick) {
  if (s.recording) return s.recording->at_tick(tick);
  const double t = s.time_at(tick);
  // Backward difference; the first tick uses the forward difference so a
  // path starting at t = 0 reports its segment velocity immediately.
  const double ta = tick == 0 ? t + s.dt : t;
  const double tb = ta - s.dt;

  std::vector<SkeletonObservation> out;
  out.reserve(s.agents.size());
  for (const auto& agent : s.agents) {
    if (!agent.active_at(t)) continue;
    auto left = [&](double tt) { return hand_position(agent.torso_at(tt), Hand::left, agent.hand_raised_at(Hand::left, tt), s.body); };
    auto right = [&](double tt) { return hand_position(agent.torso_at(tt), Hand::right, agent.hand_raised_at(Hand::right, tt), s.body); };
    SkeletonObservation o;
    o.person_id = agent.id;
    o.t = t;
    o.torso_pos = agent.torso_at(t);
    o.shoulder_height = o.torso_pos.z() + s.body.shoulder_offset;
    o.left_hand_pos = left(t);
    o.right_hand_pos = right(t);
    o.torso_vel = (agent.torso_at(ta) - agent.torso_at(tb)) / s.dt;
    o.left_hand_vel = (left(ta) - left(tb)) / s.dt;
    o.right_hand_vel = (right(ta) - right(tb)) / s.dt;
    out.push_back(with_geometric_hand_flags(o));
  }
  return out;
}

// --- recorded streams ------------------------------------------------------

RecordedStream RecordedStream::from_observations(std::vector<SkeletonObservation> observations, double dt) {
  RecordedStream rs;
  for (auto& o : observations) {
    const auto tick = static_cast<std::int64_t>(std::llround(o.t / dt));
    o.t = static_cast<double>(tick) * dt;
    auto& batch = rs.by_tick_[tick];
    std::erase_if(batch, [&](const SkeletonObservation& b) { return b.person_id == o.person_id; });
    batch.push_back(o);
  }

  struct Debounce {
    bool reported = false;
    bool candidate = false;
    int run = 0;

    bool feed(bool raw) {
      if (raw == reported) {
        run = 0;
        return reported;
      }
      if (raw != candidate) {
        candidate = raw;
        run = 0;
      }
      if (++run >= kDebounceTicks) {
        reported = raw;
        run = 0;
      }
      return reported;
    }
  };
  std::map<int, std::array<Debounce, 2>> state;
  for (auto& [tick, batch] : rs.by_tick_) {
    std::sort(batch.begin(), batch.end(), [](const auto& a, const auto& b) { return a.person_id < b.person_id; });
    for (auto& o : batch) {
      const bool raw_left = hand_above_shoulder(o, Hand::left);
      const bool raw_right = hand_above_shoulder(o, Hand::right);
      auto [it, fresh] = state.try_emplace(o.person_id);
      auto& db = it->second;
      if (fresh) {
        db[0].reported = db[0].candidate = raw_left;
        db[1].reported = db[1].candidate = raw_right;
      }
      o.left_raised = db[0].feed(raw_left);
      o.right_raised = db[1].feed(raw_right);
    }
  }
  return rs;
}

RecordedStream RecordedStream::load_jsonl(const std::filesystem::path& path, double dt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open recorded stream " + path.string());
  std::vector<SkeletonObservation> obs;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(n);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw ValidationError(where, "invalid JSON line");
    }
    obs.push_back(observation_from_json(j, where));
    if (!is_finite(obs.back())) throw ValidationError(where, "non-finite value");
  }
  return from_observations(std::move(obs), dt);
}

std::vector<SkeletonObservation> RecordedStream::at_tick(std::int64_t tick) const {
  auto it = by_tick_.find(tick);
  return it == by_tick_.end() ? std::vector<SkeletonObservation>{} : it->second;
}

// --- loading ---------------------------------------------------------------

namespace {

HandEvent parse_hand_event(const json& e, const std::string& w) {
  HandEvent ev;
  ev.t = as_number(require(e, "t", w), join(w, "t"));
  const std::string hand = as_string(require(e, "hand", w), join(w, "hand"));
  if (hand == "left") {
    ev.hand = Hand::left;
  } else if (hand == "right") {
    ev.hand = Hand::right;
  } else {
    throw ValidationError(join(w, "hand"), "must be \"left\" or \"right\"");
  }
  const std::string state = as_string(require(e, "state", w), join(w, "state"));
  if (state == "raise") {
    ev.raise = true;
  } else if (state == "lower") {
    ev.raise = false;
  } else {
    throw ValidationError(join(w, "state"), "must be \"raise\" or \"lower\"");
  }
  return ev;
}

AgentScript parse_agent(const json& a, const std::string& w) {
  if (!a.is_object()) throw ValidationError(w, "expected an object");
  detail::reject_unknown_keys(a, {"id", "waypoints", "hand_events", "enter_s", "exit_s"}, w);
  AgentScript agent;
  agent.id = static_cast<int>(as_integer(require(a, "id", w), join(w, "id")));
  const std::string ww = join(w, "waypoints");
  const json& wps = require(a, "waypoints", w);
  if (!wps.is_array()) throw ValidationError(ww, "expected an array");
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const std::string pw = index(ww, i);
    agent.waypoints.push_back(
        {as_number(require(wps[i], "t", pw), join(pw, "t")), as_vec3(require(wps[i], "pos", pw), join(pw, "pos"))});
  }
  if (auto it = a.find("hand_events"); it != a.end()) {
    const std::string hw = join(w, "hand_events");
    if (!it->is_array()) throw ValidationError(hw, "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) agent.hand_events.push_back(parse_hand_event((*it)[i], index(hw, i)));
  }
  detail::read_number(a, "enter_s", agent.enter_s, w);
  if (auto it = a.find("exit_s"); it != a.end()) agent.exit_s = as_number(*it, join(w, "exit_s"));
  return agent;
}

}  // namespace

Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("", "scenario must be a JSON object");
  detail::reject_unknown_keys(j,
                              {"seed", "dt", "duration_s", "condition", "agents", "events", "recording", "weights",
                               "drift", "motion", "robot", "workspace", "body"},
                              "");
  Scenario s;
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
      throw ValidationError("seed", "expected a non-negative integer");
    }
    s.seed = it->get<std::uint64_t>();
  }
  detail::read_number(j, "dt", s.dt, "");
  s.duration_s = as_number(require(j, "duration_s", ""), "duration_s");

  if (auto it = j.find("condition"); it != j.end()) {
    if (!it->is_object()) throw ValidationError("condition", "expected an object");
    detail::reject_unknown_keys(*it, {"arousal", "attention"}, "condition");
    detail::read_number(*it, "arousal", s.condition.arousal, "condition");
    if (auto a = it->find("attention"); a != it->end()) {
      auto mode = attention_mode_from_string(as_string(*a, "condition.attention"));
      if (!mode) throw ValidationError("condition.attention", "must be \"low\" or \"high\"");
      s.condition.attention = *mode;
    }
  }

  if (auto it = j.find("robot"); it != j.end()) {
    if (it->is_string()) {
      std::filesystem::path p = it->get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      s.robot = load_robot_model(p.string());
    } else {
      s.robot = robot_model_from_json(*it, "robot");
    }
  }
  if (auto it = j.find("weights"); it != j.end()) s.weights = attention_weights_from_json(*it, "weights");
  if (auto it = j.find("drift"); it != j.end()) s.drift = drift_config_from_json(*it, "drift");
  if (auto it = j.find("motion"); it != j.end()) s.motion = motion_config_from_json(*it, "motion");
  if (auto it = j.find("workspace"); it != j.end()) {
    s.workspace.min = as_vec3(require(*it, "min", "workspace"), "workspace.min");
    s.workspace.max = as_vec3(require(*it, "max", "workspace"), "workspace.max");
  }
  if (auto it = j.find("body"); it != j.end()) {
    if (!it->is_object()) throw ValidationError("body", "expected an object");
    detail::reject_unknown_keys(*it, {"shoulder_offset", "hip_offset", "hand_lateral", "raise_clearance", "head_offset"},
                                "body");
    detail::read_number(*it, "shoulder_offset", s.body.shoulder_offset, "body");
    detail::read_number(*it, "hip_offset", s.body.hip_offset, "body");
    detail::read_number(*it, "hand_lateral", s.body.hand_lateral, "body");
    detail::read_number(*it, "raise_clearance", s.body.raise_clearance, "body");
    detail::read_number(*it, "head_offset", s.body.head_offset, "body");
  }

  if (auto it = j.find("agents"); it != j.end()) {
    if (!it->is_array()) throw ValidationError("agents", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) s.agents.push_back(parse_agent((*it)[i], index("agents", i)));
  }

  // Top-level events reference agents by id.
  if (auto it = j.find("events"); it != j.end()) {
    if (!it->is_array()) throw ValidationError("events", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string w = index("events", i);
      const int agent_id = static_cast<int>(as_integer(require((*it)[i], "agent", w), join(w, "agent")));
      auto agent = std::find_if(s.agents.begin(), s.agents.end(), [&](const auto& a) { return a.id == agent_id; });
      if (agent == s.agents.end()) {
        throw ValidationError(join(w, "agent"), "unknown agent reference " + std::to_string(agent_id));
      }
      agent->hand_events.push_back(parse_hand_event((*it)[i], w));
    }
  }
  for (auto& a : s.agents) {
    std::stable_sort(a.hand_events.begin(), a.hand_events.end(),
                     [](const HandEvent& x, const HandEvent& y) { return x.t < y.t; });
  }

  if (auto it = j.find("recording"); it != j.end()) {
    std::filesystem::path p = as_string(*it, "recording");
    if (p.is_relative()) p = base_dir / p;
    if (!(s.dt > 0.0)) throw ValidationError("dt", "must be > 0");
    s.recording = RecordedStream::load_jsonl(p, s.dt);
  }

  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, const ScenarioOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError(path.string(), "expected a JSON object");
  if (overrides.seed) j["seed"] = *overrides.seed;
  if (overrides.dt) j["dt"] = *overrides.dt;
  return scenario_from_json(j, path.parent_path());
}

const char* demo_scenario_json() { return kEmbeddedDemoScenario; }

Scenario demo_scenario(const ScenarioOverrides& overrides) {
  json j = json::parse(kEmbeddedDemoScenario);
  if (overrides.seed) j["seed"] = *overrides.seed;
  if (overrides.dt) j["dt"] = *overrides.dt;
  return scenario_from_json(j);
}

void validate(const Scenario& s) {
  if (!(s.dt > 0.0)) throw ValidationError("dt", "must be > 0");
  if (!(s.duration_s > 0.0)) throw ValidationError("duration_s", "must be > 0");
  if (!(s.condition.arousal >= 1.0 && s.condition.arousal <= 10.0)) {
    throw ValidationError("condition.arousal", "must be in [1, 10]");
  }
  s.weights.validate("weights");
  s.drift.validate("drift", s.dt, s.robot.reach_radius());
  s.motion.validate("motion");
  s.robot.validate("robot");
  if (!(s.workspace.min.array() < s.workspace.max.array()).all()) {
    throw ValidationError("workspace", "min must be < max on every axis");
  }
  if (s.recording && !s.agents.empty()) throw ValidationError("recording", "cannot be combined with scripted agents");

  std::set<int> ids;
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto& a = s.agents[i];
    const std::string w = index("agents", i);
    if (!ids.insert(a.id).second) throw ValidationError(join(w, "id"), "duplicate agent id " + std::to_string(a.id));
    if (a.waypoints.empty()) throw ValidationError(join(w, "waypoints"), "at least one waypoint required");
    for (std::size_t k = 0; k < a.waypoints.size(); ++k) {
      const std::string pw = index(join(w, "waypoints"), k);
      if (k > 0 && !(a.waypoints[k].t > a.waypoints[k - 1].t)) {
        throw ValidationError(join(pw, "t"), "waypoints must be strictly time-sorted");
      }
      if (!s.workspace.contains(a.waypoints[k].pos)) throw ValidationError(join(pw, "pos"), "outside the workspace");
    }
    if (a.exit_s && !(*a.exit_s > a.enter_s)) throw ValidationError(join(w, "exit_s"), "must be > enter_s");
  }
}

json scenario_to_json(const Scenario& s) {
  json agents = json::array();
  for (const auto& a : s.agents) {
    json wps = json::array();
    for (const auto& w : a.waypoints) wps.push_back({{"t", w.t}, {"pos", detail::to_array(w.pos)}});
    json evs = json::array();
    for (const auto& e : a.hand_events) {
      evs.push_back({{"t", e.t}, {"hand", to_string(e.hand)}, {"state", e.raise ? "raise" : "lower"}});
    }
    json ja = {{"id", a.id}, {"waypoints", wps}, {"hand_events", evs}, {"enter_s", a.enter_s}};
    if (a.exit_s) ja["exit_s"] = *a.exit_s;
    agents.push_back(ja);
  }
  return {{"seed", s.seed},
          {"dt", s.dt},
          {"duration_s", s.duration_s},
          {"condition", {{"arousal", s.condition.arousal}, {"attention", to_string(s.condition.attention)}}},
          {"agents", agents},
          {"weights", to_json(s.weights)},
          {"drift", to_json(s.drift)},
          {"motion", to_json(s.motion)},
          {"robot", robot_model_to_json(s.robot)},
          {"workspace", {{"min", detail::to_array(s.workspace.min)}, {"max", detail::to_array(s.workspace.max)}}}};
}

}  // namespace socialarm
