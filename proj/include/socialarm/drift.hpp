#pragma once

#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"
#include "socialarm/rng.hpp"
#include "socialarm/scene.hpp"

namespace socialarm {

/// Cylindrical band around the robot base, expressed in the base frame.
struct SpawnShell {
  double r_min = 0.4;
  double r_max = 0.8;
  double z_min = 0.2;
  double z_max = 0.9;
  /// Azimuth sector, radians, measured from the base frame +x axis.
  double azimuth_min = -std::numbers::pi / 2;
  double azimuth_max = std::numbers::pi / 2;

  bool contains(const Vec3& p_base, double tol = 1e-9) const;
};

struct DriftConfig {
  double rate_min = 0.02;  // events/s at arousal 1
  double rate_max = 0.2;   // events/s at arousal 10
  double lifespan_min = 0.5;
  double lifespan_max = 2.0;
  SpawnShell shell;

  /// Checks ranges; with dt given also requires rate_max * dt < 0.5 and,
  /// with a reach radius, that the shell lies inside it.
  void validate(const std::string& where = "drift", double dt = 0.0, double reach_radius = 0.0) const;
};

struct DriftState {
  std::vector<VirtualTarget> targets;
  int next_id = 1;
  int spawn_count = 0;
};

/// rate_min + (arousal - 1) / 9 * (rate_max - rate_min). Throws
/// ValidationError when arousal is outside [1, 10].
double drift_rate(double arousal, const DriftConfig& cfg);

/// Uniform (by area) sample of the shell, returned in the world frame.
Vec3 sample_shell(const SpawnShell& shell, const Transform& base_pose, Rng& rng);

/// Removes expired targets, then, when no drift target is alive, spawns one
/// with probability drift_rate * dt. The generator is consumed only on
/// ticks where spawning is possible.
DriftState step_drift(DriftState state, double arousal, const DriftConfig& cfg, const Transform& base_pose, Rng& rng,
                      double t, double dt);

DriftConfig drift_config_from_json(const nlohmann::json& j, const std::string& where = "drift");
nlohmann::json to_json(const DriftConfig& cfg);
nlohmann::json to_json(const VirtualTarget& target);

}  // namespace socialarm
