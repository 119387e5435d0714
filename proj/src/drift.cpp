#include "socialarm/drift.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"

namespace socialarm {

using detail::join;
using nlohmann::json;

bool SpawnShell::contains(const Vec3& p, double tol) const {
  const double r = std::hypot(p.x(), p.y());
  const double az = std::atan2(p.y(), p.x());
  return r >= r_min - tol && r <= r_max + tol && p.z() >= z_min - tol && p.z() <= z_max + tol &&
         az >= azimuth_min - tol && az <= azimuth_max + tol;
}

void DriftConfig::validate(const std::string& where, double dt, double reach_radius) const {
  if (!(rate_min >= 0.0)) throw ValidationError(join(where, "rate_min"), "must be >= 0");
  if (!(rate_max >= rate_min)) throw ValidationError(join(where, "rate_max"), "must be >= rate_min");
  if (!(lifespan_min > 0.0)) throw ValidationError(join(where, "lifespan_min"), "must be > 0");
  if (!(lifespan_max > lifespan_min)) throw ValidationError(join(where, "lifespan_max"), "must be > lifespan_min");
  const std::string sw = join(where, "spawn_shell");
  if (!(shell.r_min >= 0.0 && shell.r_max > shell.r_min)) throw ValidationError(join(sw, "r_max"), "need 0 <= r_min < r_max");
  if (!(shell.z_max > shell.z_min)) throw ValidationError(join(sw, "z_max"), "must be > z_min");
  if (!(shell.azimuth_max > shell.azimuth_min)) throw ValidationError(join(sw, "azimuth_max"), "must be > azimuth_min");
  if (dt > 0.0 && !(rate_max * dt < 0.5)) throw ValidationError(join(where, "rate_max"), "rate_max * dt must be < 0.5");
  if (reach_radius > 0.0) {
    const double far = std::hypot(shell.r_max, std::max(std::abs(shell.z_min), std::abs(shell.z_max)));
    if (far > reach_radius) throw ValidationError(sw, "spawn shell extends beyond the robot's reach");
  }
}

double drift_rate(double arousal, const DriftConfig& cfg) {
  if (!(arousal >= 1.0 && arousal <= 10.0)) throw ValidationError("arousal", "must be in [1, 10]");
  return cfg.rate_min + (arousal - 1.0) / 9.0 * (cfg.rate_max - cfg.rate_min);
}

Vec3 sample_shell(const SpawnShell& shell, const Transform& base_pose, Rng& rng) {
  const double r = std::sqrt(rng.uniform(shell.r_min * shell.r_min, shell.r_max * shell.r_max));
  const double az = rng.uniform(shell.azimuth_min, shell.azimuth_max);
  const double z = rng.uniform(shell.z_min, shell.z_max);
  return base_pose * Vec3(r * std::cos(az), r * std::sin(az), z);
}

DriftState step_drift(DriftState state, double arousal, const DriftConfig& cfg, const Transform& base_pose, Rng& rng,
                      double t, double dt) {
  std::erase_if(state.targets, [t](const VirtualTarget& v) { return v.expired(t); });
  const bool live = std::any_of(state.targets.begin(), state.targets.end(),
                                [](const VirtualTarget& v) { return v.kind == TargetKind::drift; });
  if (live) return state;

  const double p = drift_rate(arousal, cfg) * dt;
  if (rng.uniform() < p) {
    VirtualTarget v;
    v.target_id = state.next_id++;
    v.kind = TargetKind::drift;
    v.born_at = t;
    v.pos = sample_shell(cfg.shell, base_pose, rng);
    v.lifespan = rng.uniform(cfg.lifespan_min, cfg.lifespan_max);
    state.targets.push_back(v);
    ++state.spawn_count;
  }
  return state;
}

DriftConfig drift_config_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where, "expected an object");
  detail::reject_unknown_keys(j, {"rate_min", "rate_max", "lifespan_range", "spawn_shell"}, where);
  DriftConfig c;
  detail::read_number(j, "rate_min", c.rate_min, where);
  detail::read_number(j, "rate_max", c.rate_max, where);
  if (auto it = j.find("lifespan_range"); it != j.end()) {
    const std::string w = join(where, "lifespan_range");
    if (!it->is_array() || it->size() != 2) throw ValidationError(w, "expected [s_min, s_max]");
    c.lifespan_min = detail::as_number((*it)[0], w);
    c.lifespan_max = detail::as_number((*it)[1], w);
  }
  if (auto it = j.find("spawn_shell"); it != j.end()) {
    const std::string w = join(where, "spawn_shell");
    if (!it->is_object()) throw ValidationError(w, "expected an object");
    detail::reject_unknown_keys(*it, {"r_min", "r_max", "z_min", "z_max", "azimuth_min", "azimuth_max"}, w);
    detail::read_number(*it, "r_min", c.shell.r_min, w);
    detail::read_number(*it, "r_max", c.shell.r_max, w);
    detail::read_number(*it, "z_min", c.shell.z_min, w);
    detail::read_number(*it, "z_max", c.shell.z_max, w);
    detail::read_number(*it, "azimuth_min", c.shell.azimuth_min, w);
    detail::read_number(*it, "azimuth_max", c.shell.azimuth_max, w);
  }
  c.validate(where);
  return c;
}

json to_json(const DriftConfig& c) {
  return {{"rate_min", c.rate_min},
          {"rate_max", c.rate_max},
          {"lifespan_range", json::array({c.lifespan_min, c.lifespan_max})},
          {"spawn_shell",
           {{"r_min", c.shell.r_min},
            {"r_max", c.shell.r_max},
            {"z_min", c.shell.z_min},
            {"z_max", c.shell.z_max},
            {"azimuth_min", c.shell.azimuth_min},
            {"azimuth_max", c.shell.azimuth_max}}}};
}

json to_json(const VirtualTarget& v) {
  return {{"id", v.target_id},
          {"kind", to_string(v.kind)},
          {"pos", detail::to_array(v.pos)},
          {"born_at", v.born_at},
          {"lifespan", v.lifespan}};
}

}  // namespace socialarm
