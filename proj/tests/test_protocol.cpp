#include "doctest.h"
#include "socialarm/protocol.hpp"
#include "socialarm/server.hpp"

using namespace socialarm;
using nlohmann::json;

namespace {

json msg(const std::string& type, int seq, json payload) { return make_message(type, seq, std::move(payload)); }

std::optional<json> last_state(const std::vector<json>& msgs) {
  std::optional<json> out;
  for (const auto& m : msgs)
    if (m["type"] == "state") out = m;
  return out;
}

std::vector<json> errors(const std::vector<json>& msgs) {
  std::vector<json> out;
  for (const auto& m : msgs)
    if (m["type"] == "error") out.push_back(m);
  return out;
}

}  // namespace

TEST_CASE("hello handshake") {
  CHECK_FALSE(check_hello(json::parse(R"({"type": "hello", "version": 1})")));
  CHECK_FALSE(check_hello(json::parse(R"({"type": "hello", "seq": 0, "payload": {"version": 1}})")));
  CHECK(check_hello(json::parse(R"({"type": "hello", "version": 2})"))->field == "version");
  CHECK(check_hello(json::parse(R"({"type": "hello"})"))->field == "version");
  CHECK(check_hello(json::parse(R"({"type": "spawn_person"})"))->field == "type");
  CHECK(check_hello(json::parse("[1, 2]")));
}

TEST_CASE("command parsing names the offending field") {
  auto field_of = [](const json& m) { return std::get<ProtocolError>(parse_command(m)).field; };
  CHECK(field_of(json::parse(R"({"seq": 1, "payload": {}})")) == "type");
  CHECK(field_of(json::parse(R"({"type": "reset", "payload": {"seed": 1}})")) == "seq");
  CHECK(field_of(json::parse(R"({"type": "reset", "seq": 1})")) == "payload");
  CHECK(field_of(msg("set_arousal", 1, {{"level", 11}})) == "payload.level");
  CHECK(field_of(msg("set_arousal", 1, json::object())) == "payload.level");
  CHECK(field_of(msg("set_attention", 1, {{"mode", "medium"}})) == "payload.mode");
  CHECK(field_of(msg("spawn_person", 1, {{"id", 1}, {"pos", {1, 2}}})) == "payload.pos");
  CHECK(field_of(msg("spawn_person", 1, {{"id", "a"}, {"pos", {1, 2, 3}}})) == "payload.id");
  CHECK(field_of(msg("set_hand", 1, {{"id", 1}, {"hand", "up"}, {"raised", true}})) == "payload.hand");
  CHECK(field_of(msg("set_hand", 1, {{"id", 1}, {"hand", "left"}, {"raised", 1}})) == "payload.raised");
  CHECK(field_of(msg("reset", 1, {{"seed", -3}})) == "payload.seed");
  CHECK(field_of(msg("set_rate", 1, {{"ticks_per_message", 0}})) == "payload.ticks_per_message");
  CHECK(field_of(msg("fly", 1, json::object())) == "type");

  const auto ok = std::get<ParsedCommand>(parse_command(msg("set_hand", 9, {{"id", 4}, {"hand", "right"}, {"raised", true}})));
  CHECK(ok.seq == 9);
  const auto& h = std::get<cmd::SetHand>(ok.command);
  CHECK(h.id == 4);
  CHECK(h.hand == Hand::right);
  CHECK(h.raised);
}

TEST_CASE("spawned person becomes the gaze target on the next tick") {
  LiveSession s(EngineSettings{}, 1);
  CHECK(s.welcome()["payload"]["version"] == kProtocolVersion);
  s.tick();
  CHECK_FALSE(s.submit(msg("spawn_person", 1, {{"id", 7}, {"pos", {2.0, 0.3, 1.1}}})));
  const auto st = last_state(s.tick());
  REQUIRE(st);
  const json& p = (*st)["payload"];
  CHECK(p["gaze"]["kind"] == "primary");
  CHECK(p["gaze"]["id"] == 7);
  CHECK(p["attended"] == 7);
  REQUIRE(p["persons"].size() == 1);
  CHECK(p["persons"][0]["theta"] == 1.0);
  CHECK(p["persons"][0].contains("phi"));
  CHECK(p["ee"]["position"].size() == 3);
  CHECK(p["ee"]["quaternion"].size() == 4);
  CHECK(p["q"].size() == 6);
}

TEST_CASE("raising arousal enlarges per-tick joint deltas") {
  LiveSession s(EngineSettings{}, 1);
  s.submit(msg("spawn_person", 1, {{"id", 1}, {"pos", {1.2, -1.5, 1.3}}}));
  auto q_of = [](const json& st) {
    std::vector<double> q = st["payload"]["q"];
    return q;
  };
  auto mean_delta = [&](int n) {
    auto prev = q_of(*last_state(s.tick()));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto q = q_of(*last_state(s.tick()));
      for (int j = 0; j < 6; ++j) sum += std::abs(q[j] - prev[j]);
      prev = q;
    }
    return sum / n;
  };
  const double slow = mean_delta(10);
  s.submit(msg("set_arousal", 2, {{"level", 10}}));
  s.submit(msg("move_person", 3, {{"id", 1}, {"pos", {1.2, 1.5, 1.3}}}));
  const auto st = last_state(s.tick());
  CHECK(st->at("payload")["arousal"] == 10.0);
  const double fast = mean_delta(10);
  CHECK(fast > slow);
}

TEST_CASE("bad commands get error replies while ticks continue") {
  LiveSession s(EngineSettings{}, 1);
  auto reply = s.submit(std::string("{nope"));
  REQUIRE(reply);
  CHECK((*reply)["type"] == "error");
  CHECK((*reply)["seq"] == -1);
  reply = s.submit(msg("set_arousal", 5, {{"level", 0}}));
  REQUIRE(reply);
  CHECK((*reply)["seq"] == 5);
  CHECK((*reply)["payload"]["field"] == "payload.level");
  CHECK(last_state(s.tick())->at("payload")["tick"] == 0);

  s.submit(msg("move_person", 6, {{"id", 99}, {"pos", {1, 1, 1}}}));
  s.submit(msg("spawn_person", 7, {{"id", 1}, {"pos", {1, 1, 1}}}));
  s.submit(msg("spawn_person", 8, {{"id", 1}, {"pos", {2, 1, 1}}}));
  s.submit(msg("spawn_person", 9, {{"id", 2}, {"pos", {20, 1, 1}}}));
  s.submit(msg("remove_person", 10, {{"id", 5}}));
  const auto out = s.tick();
  const auto errs = errors(out);
  REQUIRE(errs.size() == 4);
  CHECK(errs[0]["seq"] == 6);
  CHECK(errs[0]["payload"]["field"] == "payload.id");
  CHECK(errs[1]["seq"] == 8);
  CHECK(errs[2]["seq"] == 9);
  CHECK(errs[2]["payload"]["field"] == "payload.pos");
  CHECK(errs[3]["seq"] == 10);
  const auto st = last_state(out);
  CHECK((*st)["payload"]["tick"] == 1);
  CHECK((*st)["payload"]["persons"].size() == 1);
}

TEST_CASE("person cap") {
  LiveSession s(EngineSettings{}, 1);
  for (int id = 0; id < 17; ++id) s.submit(msg("spawn_person", id, {{"id", id}, {"pos", {2.0, -4.0 + 0.5 * id, 1.0}}}));
  const auto out = s.tick();
  const auto errs = errors(out);
  REQUIRE(errs.size() == 1);
  CHECK(errs[0]["seq"] == 16);
  CHECK(last_state(out)->at("payload")["persons"].size() == kMaxPersonsPerSession);
}

TEST_CASE("commands apply atomically at the tick boundary") {
  LiveSession s(EngineSettings{}, 1);
  s.submit(msg("spawn_person", 1, {{"id", 1}, {"pos", {2, 0, 1}}}));
  s.submit(msg("set_hand", 2, {{"id", 1}, {"hand", "left"}, {"raised", true}}));
  s.submit(msg("set_attention", 3, {{"mode", "low"}}));
  const auto p = last_state(s.tick())->at("payload");
  CHECK(p["attention"] == "low");
  CHECK(p["persons"][0]["left_raised"] == true);
  CHECK(p["attended"].is_null());
}

TEST_CASE("live velocities are differenced over three ticks") {
  EngineSettings st;
  LiveSession s(st, 1);
  s.submit(msg("spawn_person", 1, {{"id", 1}, {"pos", {2, 0, 1}}}));
  for (int k = 0; k < 4; ++k) CHECK(last_state(s.tick())->at("payload")["persons"][0]["V"] == 0.0);
  s.submit(msg("move_person", 2, {{"id", 1}, {"pos", {2.1, 0, 1}}}));
  // one 0.1 m jump is spread over three tick intervals
  AttentionWeights w;
  const double speed = 0.1 / (3 * st.dt);
  const double expected = speed / w.v_max_torso + speed / w.v_max_left + speed / w.v_max_right;
  for (int k = 0; k < 3; ++k) {
    const auto p = last_state(s.tick())->at("payload");
    CHECK(p["persons"][0]["V"].get<double>() == doctest::Approx(expected).epsilon(1e-9));
  }
  CHECK(last_state(s.tick())->at("payload")["persons"][0]["V"] == 0.0);
}

TEST_CASE("set_rate, reset and session isolation") {
  LiveSession a(EngineSettings{}, 1), b(EngineSettings{}, 2);
  a.submit(msg("set_rate", 1, {{"ticks_per_message", 3}}));
  a.submit(msg("spawn_person", 2, {{"id", 1}, {"pos", {2, 0, 1}}}));
  int states = 0;
  for (int i = 0; i < 9; ++i) states += last_state(a.tick()).has_value();
  CHECK(states == 3);
  CHECK(a.ticks_per_message() == 3);
  const auto bs = last_state(b.tick());
  CHECK(bs->at("payload")["persons"].empty());

  a.submit(msg("reset", 3, {{"seed", 11}}));
  const auto out = a.tick();
  CHECK(a.current_tick() == 1);
  CHECK(last_state(out)->at("payload")["persons"].empty());
}

TEST_CASE("bounded queue drops the oldest entries") {
  BoundedQueue<int> q(3);
  for (int i = 0; i < 5; ++i) q.push(i);
  CHECK(q.size() == 3);
  CHECK(q.dropped() == 2);
  CHECK(*q.pop() == 2);
  q.close();
  CHECK(*q.pop() == 3);
  CHECK(*q.pop() == 4);
  CHECK_FALSE(q.pop().has_value());
}
