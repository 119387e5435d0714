#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "socialarm/scene.hpp"

namespace socialarm {

enum class AttentionMode { low, high };

/// Saliency weights and habituation rates. All fields are configuration;
/// the defaults are plausible human-scale magnitudes.
struct AttentionWeights {
  double w_p = 1.0;
  double w_v = 1.0;
  double w_proximity = 1.0;
  double w_hand = 0.5;
  double lambda = 0.5;          // 1/m, proximity decay
  double v_max_torso = 2.0;     // m/s
  double v_max_right = 3.0;     // m/s
  double v_max_left = 3.0;      // m/s
  double m_hab = -0.1;          // 1/s, applied while attended
  double m_rest = 0.05;         // 1/s, applied while not attended
  double hysteresis_margin = 0.05;
  double eviction_horizon_s = 5.0;

  void validate(const std::string& where = "weights") const;
};

/// Per-person decomposition of the attention score.
struct AttentionRecord {
  int person_id = 0;
  double P = 0.0;
  double V = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  double d = 0.0;
  bool h_left = false;
  bool h_right = false;
};

struct AttentionState {
  std::map<int, double> thetas;
  /// Seconds each tracked person has been continuously absent.
  std::map<int, double> absent_s;
  std::optional<int> current_target;
  std::int64_t last_switch_tick = 0;
};

/// P = w_proximity * exp(-lambda * d) + w_hand * (h_left + h_right),
/// d = |torso - robot_base|.
double position_score(const SkeletonObservation& obs, const Vec3& robot_base, const AttentionWeights& w);

/// V = sum over torso/right/left of clamp(|v| / v_max, 0, 1).
double velocity_score(const SkeletonObservation& obs, const AttentionWeights& w);

/// One habituation step. The attended person (state.current_target) decays
/// at m_hab, every other tracked person recovers at m_rest, values are
/// clamped to [0, 1]. Unknown present persons enter at 1.0; persons absent
/// for eviction_horizon_s or longer are dropped.
AttentionState update_habituation(AttentionState state, const std::set<int>& present_ids, double dt,
                                  const AttentionWeights& w);

/// Argmax of phi with hysteresis in favour of the incumbent and lowest-id
/// tie break. Returns nullopt for an empty record list.
std::optional<int> select_target(std::span<const AttentionRecord> records, const AttentionState& state,
                                 const AttentionWeights& w);

AttentionRecord score_person(const SkeletonObservation& obs, const Vec3& robot_base, double theta,
                             const AttentionWeights& w);

struct AttentionStep {
  AttentionState state;
  std::vector<AttentionRecord> records;  // sorted by person_id
};

/// Scores every present person with the pre-update theta, selects the
/// target, then advances habituation using the new selection. In low
/// attention mode persons are still scored but never selected.
AttentionStep step_attention(const WorldState& world, AttentionState state, const AttentionWeights& w, double dt,
                             AttentionMode mode = AttentionMode::high);

AttentionWeights attention_weights_from_json(const nlohmann::json& j, const std::string& where = "weights");
nlohmann::json to_json(const AttentionWeights& w);
nlohmann::json to_json(const AttentionRecord& r);

const char* to_string(AttentionMode mode);
std::optional<AttentionMode> attention_mode_from_string(const std::string& s);

}  // namespace socialarm
