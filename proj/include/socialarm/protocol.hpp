#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "socialarm/harness.hpp"

namespace socialarm {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxPersonsPerSession = 16;
inline constexpr std::size_t kMaxPendingCommands = 256;

namespace cmd {
struct SetArousal { double level; };
struct SetAttention { AttentionMode mode; };
struct SpawnPerson { int id; Vec3 pos; };
struct MovePerson { int id; Vec3 pos; };
struct SetHand { int id; Hand hand; bool raised; };
struct RemovePerson { int id; };
struct Reset { std::uint64_t seed; };
struct SetRate { int ticks_per_message; };
}  // namespace cmd

using ClientCommand = std::variant<cmd::SetArousal, cmd::SetAttention, cmd::SpawnPerson, cmd::MovePerson,
                                   cmd::SetHand, cmd::RemovePerson, cmd::Reset, cmd::SetRate>;

struct ProtocolError {
  std::string field;
  std::string message;
};

struct ParsedCommand {
  std::int64_t seq = 0;
  ClientCommand command;
};

/// Validates the {type, seq, payload} envelope and the payload fields.
/// Existence of referenced ids is checked later, when the command is applied.
std::variant<ParsedCommand, ProtocolError> parse_command(const nlohmann::json& message);

/// Accepts {type:"hello", version:1} (version may also sit in payload).
std::optional<ProtocolError> check_hello(const nlohmann::json& message);

nlohmann::json make_message(const std::string& type, std::int64_t seq, nlohmann::json payload);
nlohmann::json error_message(std::int64_t seq, const ProtocolError& error);

/// One live session: a client-steered world driving an Engine. Commands
/// may be submitted from any thread; they take effect at the next tick
/// boundary, in arrival order.
class LiveSession {
 public:
  explicit LiveSession(EngineSettings settings, int session_id = 0);

  /// Parses a raw message. Malformed input is answered immediately with the
  /// returned error reply; valid commands are queued.
  std::optional<nlohmann::json> submit(const std::string& text);
  std::optional<nlohmann::json> submit(const nlohmann::json& message);

  /// Applies queued commands, advances one tick and returns the messages to
  /// send: error replies for commands that failed to apply, followed by a
  /// state tick when one is due.
  std::vector<nlohmann::json> tick();

  nlohmann::json welcome() const;

  std::int64_t current_tick() const;
  int ticks_per_message() const;
  double dt() const { return dt_; }

 private:
  struct LivePerson {
    Vec3 pos = Vec3::Zero();
    bool left_raised = false;
    bool right_raised = false;
    /// (torso, left raised, right raised) for the last few ticks, oldest first.
    std::deque<std::tuple<Vec3, bool, bool>> history;
  };

  std::optional<ProtocolError> apply(const ClientCommand& command);
  std::vector<SkeletonObservation> observe();
  nlohmann::json state_tick(const TraceRecord& record) const;

  mutable std::mutex mu_;
  std::deque<ParsedCommand> pending_;
  Engine engine_;
  int session_id_;
  double dt_;
  std::map<int, LivePerson> persons_;
  Workspace workspace_;
  BodyModel body_;
  int ticks_per_message_ = 1;
};

}  // namespace socialarm
