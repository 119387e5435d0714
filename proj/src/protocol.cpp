#include "socialarm/protocol.hpp"

#include <cmath>

#include "json_util.hpp"

namespace socialarm {

using nlohmann::json;

namespace {

/// Live-steered velocities average over this many tick intervals.
constexpr std::size_t kSmoothingTicks = 3;

struct FieldError {
  ProtocolError error;
};

const json& field(const json& payload, const char* name) {
  auto it = payload.find(name);
  if (it == payload.end()) throw FieldError{{std::string("payload.") + name, "missing field"}};
  return *it;
}

int int_field(const json& payload, const char* name) {
  const json& v = field(payload, name);
  if (!v.is_number_integer()) throw FieldError{{std::string("payload.") + name, "expected an integer"}};
  return v.get<int>();
}

double number_field(const json& payload, const char* name) {
  const json& v = field(payload, name);
  if (!v.is_number() || !std::isfinite(v.get<double>())) {
    throw FieldError{{std::string("payload.") + name, "expected a finite number"}};
  }
  return v.get<double>();
}

Vec3 vec_field(const json& payload, const char* name) {
  const json& v = field(payload, name);
  if (!v.is_array() || v.size() != 3) throw FieldError{{std::string("payload.") + name, "expected [x, y, z]"}};
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
      throw FieldError{{std::string("payload.") + name, "expected [x, y, z]"}};
    }
    out[i] = v[i].get<double>();
  }
  return out;
}

std::string string_field(const json& payload, const char* name) {
  const json& v = field(payload, name);
  if (!v.is_string()) throw FieldError{{std::string("payload.") + name, "expected a string"}};
  return v.get<std::string>();
}

ClientCommand parse_payload(const std::string& type, const json& p) {
  if (type == "set_arousal") {
    const double level = number_field(p, "level");
    if (level < 1.0 || level > 10.0) throw FieldError{{"payload.level", "must be in [1, 10]"}};
    return cmd::SetArousal{level};
  }
  if (type == "set_attention") {
    auto mode = attention_mode_from_string(string_field(p, "mode"));
    if (!mode) throw FieldError{{"payload.mode", "must be \"low\" or \"high\""}};
    return cmd::SetAttention{*mode};
  }
  if (type == "spawn_person") return cmd::SpawnPerson{int_field(p, "id"), vec_field(p, "pos")};
  if (type == "move_person") return cmd::MovePerson{int_field(p, "id"), vec_field(p, "pos")};
  if (type == "set_hand") {
    const std::string hand = string_field(p, "hand");
    if (hand != "left" && hand != "right") throw FieldError{{"payload.hand", "must be \"left\" or \"right\""}};
    const json& raised = field(p, "raised");
    if (!raised.is_boolean()) throw FieldError{{"payload.raised", "expected a boolean"}};
    return cmd::SetHand{int_field(p, "id"), hand == "left" ? Hand::left : Hand::right, raised.get<bool>()};
  }
  if (type == "remove_person") return cmd::RemovePerson{int_field(p, "id")};
  if (type == "reset") {
    const json& seed = field(p, "seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
      throw FieldError{{"payload.seed", "expected a non-negative integer"}};
    }
    return cmd::Reset{seed.get<std::uint64_t>()};
  }
  if (type == "set_rate") {
    const int n = int_field(p, "ticks_per_message");
    if (n < 1) throw FieldError{{"payload.ticks_per_message", "must be >= 1"}};
    return cmd::SetRate{n};
  }
  throw FieldError{{"type", "unknown message type \"" + type + "\""}};
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

std::variant<ParsedCommand, ProtocolError> parse_command(const json& m) {
  if (!m.is_object()) return ProtocolError{"", "message must be a JSON object"};
  auto type = m.find("type");
  if (type == m.end() || !type->is_string()) return ProtocolError{"type", "missing or not a string"};
  auto seq = m.find("seq");
  if (seq == m.end() || !seq->is_number_integer()) return ProtocolError{"seq", "missing or not an integer"};
  auto payload = m.find("payload");
  if (payload == m.end() || !payload->is_object()) return ProtocolError{"payload", "missing or not an object"};
  try {
    return ParsedCommand{seq->get<std::int64_t>(), parse_payload(type->get<std::string>(), *payload)};
  } catch (const FieldError& e) {
    return e.error;
  }
}

std::optional<ProtocolError> check_hello(const json& m) {
  if (!m.is_object()) return ProtocolError{"", "message must be a JSON object"};
  auto type = m.find("type");
  if (type == m.end() || *type != "hello") return ProtocolError{"type", "expected hello handshake"};
  const json* version = nullptr;
  if (auto v = m.find("version"); v != m.end()) {
    version = &*v;
  } else if (auto p = m.find("payload"); p != m.end() && p->is_object() && p->contains("version")) {
    version = &(*p)["version"];
  }
  if (!version) return ProtocolError{"version", "missing"};
  if (!version->is_number_integer() || version->get<int>() != kProtocolVersion) {
    return ProtocolError{"version", "unsupported protocol version, server speaks " + std::to_string(kProtocolVersion)};
  }
  return std::nullopt;
}

json make_message(const std::string& type, std::int64_t seq, json payload) {
  return {{"type", type}, {"seq", seq}, {"payload", std::move(payload)}};
}

json error_message(std::int64_t seq, const ProtocolError& e) {
  return make_message("error", seq, {{"field", e.field}, {"message", e.message}});
}

LiveSession::LiveSession(EngineSettings settings, int session_id)
    : engine_(std::move(settings)), session_id_(session_id) {
  dt_ = engine_.settings().dt;
  body_ = engine_.settings().body;
}

std::optional<json> LiveSession::submit(const std::string& text) {
  json m;
  try {
    m = json::parse(text);
  } catch (const json::parse_error&) {
    return error_message(-1, {"", "invalid JSON"});
  }
  return submit(m);
}

std::optional<json> LiveSession::submit(const json& message) {
  auto parsed = parse_command(message);
  if (auto* err = std::get_if<ProtocolError>(&parsed)) {
    std::int64_t seq = -1;
    if (message.is_object() && message.contains("seq") && message["seq"].is_number_integer()) {
      seq = message["seq"].get<std::int64_t>();
    }
    return error_message(seq, *err);
  }
  auto& cmd = std::get<ParsedCommand>(parsed);
  std::lock_guard lock(mu_);
  if (pending_.size() >= kMaxPendingCommands) return error_message(cmd.seq, {"", "command queue full"});
  pending_.push_back(std::move(cmd));
  return std::nullopt;
}

std::optional<ProtocolError> LiveSession::apply(const ClientCommand& command) {
  return std::visit(
      [&](const auto& c) -> std::optional<ProtocolError> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, cmd::SetArousal>) {
          engine_.set_arousal(c.level);
        } else if constexpr (std::is_same_v<T, cmd::SetAttention>) {
          engine_.set_attention(c.mode);
        } else if constexpr (std::is_same_v<T, cmd::SpawnPerson>) {
          if (persons_.contains(c.id)) return ProtocolError{"payload.id", "person " + std::to_string(c.id) + " exists"};
          if (persons_.size() >= kMaxPersonsPerSession) return ProtocolError{"payload.id", "session person cap reached"};
          if (!workspace_.contains(c.pos)) return ProtocolError{"payload.pos", "outside the workspace"};
          persons_[c.id].pos = c.pos;
        } else if constexpr (std::is_same_v<T, cmd::MovePerson>) {
          auto it = persons_.find(c.id);
          if (it == persons_.end()) return ProtocolError{"payload.id", "unknown person " + std::to_string(c.id)};
          if (!workspace_.contains(c.pos)) return ProtocolError{"payload.pos", "outside the workspace"};
          it->second.pos = c.pos;
        } else if constexpr (std::is_same_v<T, cmd::SetHand>) {
          auto it = persons_.find(c.id);
          if (it == persons_.end()) return ProtocolError{"payload.id", "unknown person " + std::to_string(c.id)};
          (c.hand == Hand::left ? it->second.left_raised : it->second.right_raised) = c.raised;
        } else if constexpr (std::is_same_v<T, cmd::RemovePerson>) {
          if (persons_.erase(c.id) == 0) return ProtocolError{"payload.id", "unknown person " + std::to_string(c.id)};
        } else if constexpr (std::is_same_v<T, cmd::Reset>) {
          engine_.reset(c.seed);
          persons_.clear();
        } else if constexpr (std::is_same_v<T, cmd::SetRate>) {
          ticks_per_message_ = c.ticks_per_message;
        }
        return std::nullopt;
      },
      command);
}

std::vector<SkeletonObservation> LiveSession::observe() {
  std::vector<SkeletonObservation> out;
  const double t = engine_.time();
  for (auto& [id, p] : persons_) {
    p.history.emplace_back(p.pos, p.left_raised, p.right_raised);
    while (p.history.size() > kSmoothingTicks + 1) p.history.pop_front();
    const auto& [old_torso, old_left, old_right] = p.history.front();
    const double span = static_cast<double>(p.history.size() - 1) * dt_;

    SkeletonObservation o;
    o.person_id = id;
    o.t = t;
    o.torso_pos = p.pos;
    o.shoulder_height = p.pos.z() + body_.shoulder_offset;
    o.left_hand_pos = hand_position(p.pos, Hand::left, p.left_raised, body_);
    o.right_hand_pos = hand_position(p.pos, Hand::right, p.right_raised, body_);
    if (span > 0.0) {
      o.torso_vel = (p.pos - old_torso) / span;
      o.left_hand_vel = (o.left_hand_pos - hand_position(old_torso, Hand::left, old_left, body_)) / span;
      o.right_hand_vel = (o.right_hand_pos - hand_position(old_torso, Hand::right, old_right, body_)) / span;
    }
    out.push_back(with_geometric_hand_flags(o));
  }
  return out;
}

std::vector<json> LiveSession::tick() {
  std::lock_guard lock(mu_);
  std::vector<json> out;
  while (!pending_.empty()) {
    ParsedCommand c = std::move(pending_.front());
    pending_.pop_front();
    if (auto err = apply(c.command)) out.push_back(error_message(c.seq, *err));
  }
  const TraceRecord rec = engine_.step(observe());
  if (rec.tick % ticks_per_message_ == 0) out.push_back(state_tick(rec));
  return out;
}

json LiveSession::state_tick(const TraceRecord& r) const {
  const Transform ee = forward_kinematics(engine_.settings().robot, r.pose);
  const Eigen::Quaterniond quat(ee.linear());
  json persons = json::array();
  for (const auto& a : r.attention) {
    const auto& p = persons_.at(a.person_id);
    persons.push_back({{"id", a.person_id},
                       {"pos", vec_json(p.pos)},
                       {"left_raised", a.h_left},
                       {"right_raised", a.h_right},
                       {"P", a.P},
                       {"V", a.V},
                       {"theta", a.theta},
                       {"phi", a.phi}});
  }
  json drift = json::array();
  for (const auto& v : r.drift_targets) drift.push_back(to_json(v));
  json q = json::array();
  for (int i = 0; i < kJointCount; ++i) q.push_back(r.pose.q[i]);
  return make_message(
      "state", r.tick,
      {{"tick", r.tick},
       {"time", r.time},
       {"q", q},
       {"ee", {{"position", vec_json(ee.translation())}, {"quaternion", {quat.w(), quat.x(), quat.y(), quat.z()}}}},
       {"gaze", {{"kind", to_string(r.gaze.priority)}, {"id", r.gaze.target_id}, {"pos", vec_json(r.gaze.target_pos)}}},
       {"attended", r.attended ? json(*r.attended) : json(nullptr)},
       {"persons", persons},
       {"arousal", r.arousal},
       {"attention", to_string(r.attention_mode)},
       {"drift", drift},
       {"idle", to_json(r.idle_target)},
       {"saturated", r.saturated},
       {"gaze_error_deg", r.gaze_error_deg}});
}

json LiveSession::welcome() const {
  std::lock_guard lock(mu_);
  return make_message("welcome", 0,
                      {{"version", kProtocolVersion},
                       {"session_id", session_id_},
                       {"dt", dt_},
                       {"max_persons", kMaxPersonsPerSession},
                       {"robot", robot_model_to_json(engine_.settings().robot)}});
}

std::int64_t LiveSession::current_tick() const {
  std::lock_guard lock(mu_);
  return engine_.tick();
}

int LiveSession::ticks_per_message() const {
  std::lock_guard lock(mu_);
  return ticks_per_message_;
}

}  // namespace socialarm
