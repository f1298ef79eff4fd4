/**
 * @file scenario_io.hpp
 * @brief JSON (de)serialization of ScenarioConfig and Scenario.
 *
 * Scenario file layout (schema_version 1):
 *
 *   {
 *     "schema_version": 1,
 *     "config":   { <ScenarioConfig keys> },
 *     "bs":       [x, y, z],
 *     "users":    [[x, y, z], ...],
 *     "clusters": [{"position": [x, y, z], "vr_center": [x, y],
 *                   "delay": s, "shadow_gain": g,
 *                   "mpc_azimuth_offsets": [rad, ...]}, ...]
 *   }
 *
 * Doubles are written with round-trip precision, so a reloaded scenario
 * compares equal to the one that was saved.
 */
#pragma once

#include "gus/gscm.hpp"

#include <json.hpp>

#include <fstream>
#include <string>

namespace gus {

inline constexpr int kScenarioSchemaVersion = 1;

inline void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  j = nlohmann::json{
      {"cell_half_side", c.cell_half_side},
      {"bs_exclusion_fraction", c.bs_exclusion_fraction},
      {"carrier_freq", c.carrier_freq},
      {"num_users", c.num_users},
      {"num_clusters", c.num_clusters},
      {"mpcs_per_cluster", c.mpcs_per_cluster},
      {"vr_radius", c.vr_radius},
      {"transition_size", c.transition_size},
      {"bs_height", c.bs_height},
      {"ms_height", c.ms_height},
      {"power_decay", c.power_decay},
      {"cutoff_delay", c.cutoff_delay},
      {"antenna_count", c.antenna_count},
      {"antenna_spacing_fraction", c.antenna_spacing_fraction},
      {"shadowing_sigma_db", c.shadowing_sigma_db},
      {"angular_spread_deg", c.angular_spread_deg},
      {"cluster_height_min", c.cluster_height_min},
      {"cluster_height_max", c.cluster_height_max},
      {"visibility_floor", c.visibility_floor},
      {"rng_seed", c.rng_seed},
  };
  if (c.reference_delay) {
    j["reference_delay"] = *c.reference_delay;
  } else {
    j["reference_delay"] = nullptr;
  }
}

// Missing keys keep their defaults; unknown keys are rejected so typos surface.
inline void from_json(const nlohmann::json& j, ScenarioConfig& c) {
  if (!j.is_object()) throw ConfigError("scenario config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const auto& v = it.value();
    try {
      if (k == "cell_half_side") c.cell_half_side = v.get<double>();
      else if (k == "bs_exclusion_fraction") c.bs_exclusion_fraction = v.get<double>();
      else if (k == "carrier_freq") c.carrier_freq = v.get<double>();
      else if (k == "num_users") c.num_users = v.get<std::size_t>();
      else if (k == "num_clusters") c.num_clusters = v.get<std::size_t>();
      else if (k == "mpcs_per_cluster") c.mpcs_per_cluster = v.get<std::size_t>();
      else if (k == "vr_radius") c.vr_radius = v.get<double>();
      else if (k == "transition_size") c.transition_size = v.get<double>();
      else if (k == "bs_height") c.bs_height = v.get<double>();
      else if (k == "ms_height") c.ms_height = v.get<double>();
      else if (k == "power_decay") c.power_decay = v.get<double>();
      else if (k == "cutoff_delay") c.cutoff_delay = v.get<double>();
      else if (k == "reference_delay") {
        if (v.is_null()) c.reference_delay.reset();
        else c.reference_delay = v.get<double>();
      }
      else if (k == "antenna_count") c.antenna_count = v.get<std::size_t>();
      else if (k == "antenna_spacing_fraction") c.antenna_spacing_fraction = v.get<double>();
      else if (k == "shadowing_sigma_db") c.shadowing_sigma_db = v.get<double>();
      else if (k == "angular_spread_deg") c.angular_spread_deg = v.get<double>();
      else if (k == "cluster_height_min") c.cluster_height_min = v.get<double>();
      else if (k == "cluster_height_max") c.cluster_height_max = v.get<double>();
      else if (k == "visibility_floor") c.visibility_floor = v.get<double>();
      else if (k == "rng_seed") c.rng_seed = v.get<std::uint64_t>();
      else throw ConfigError("unknown scenario config key: " + k);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("bad value for scenario config key '" + k + "': " + e.what());
    }
  }
}

namespace detail {

inline nlohmann::json vec_json(Vec3 v) { return nlohmann::json::array({v.x, v.y, v.z}); }
inline nlohmann::json vec_json(Vec2 v) { return nlohmann::json::array({v.x, v.y}); }

inline Vec3 vec3_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Vec2 vec2_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("expected a 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["config"] = s.config;
  j["bs"] = detail::vec_json(s.bs_position);
  j["users"] = nlohmann::json::array();
  for (const Vec3& u : s.users) j["users"].push_back(detail::vec_json(u));
  j["clusters"] = nlohmann::json::array();
  for (const Cluster& c : s.clusters) {
    j["clusters"].push_back({{"position", detail::vec_json(c.position)},
                             {"vr_center", detail::vec_json(c.vr_center)},
                             {"delay", c.delay},
                             {"shadow_gain", c.shadow_gain},
                             {"mpc_azimuth_offsets", c.mpc_azimuth_offsets}});
  }
  return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != kScenarioSchemaVersion) {
      throw ConfigError("unsupported scenario schema_version");
    }
    Scenario s;
    s.config = j.at("config").get<ScenarioConfig>();
    s.config.validate();
    s.bs_position = detail::vec3_from(j.at("bs"));
    for (const auto& u : j.at("users")) s.users.push_back(detail::vec3_from(u));
    for (const auto& jc : j.at("clusters")) {
      Cluster c;
      c.position = detail::vec3_from(jc.at("position"));
      c.vr_center = detail::vec2_from(jc.at("vr_center"));
      c.delay = jc.at("delay").get<double>();
      c.shadow_gain = jc.at("shadow_gain").get<double>();
      c.mpc_azimuth_offsets = jc.at("mpc_azimuth_offsets").get<std::vector<double>>();
      if (c.mpc_azimuth_offsets.size() != s.config.mpcs_per_cluster) {
        throw ConfigError("cluster MPC count does not match mpcs_per_cluster");
      }
      s.clusters.push_back(std::move(c));
    }
    if (s.users.size() != s.config.num_users || s.clusters.size() != s.config.num_clusters) {
      throw ConfigError("scenario user/cluster counts do not match its config");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scenario file: ") + e.what());
  }
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << scenario_to_json(s).dump(2) << '\n';
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scenario file: ") + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace gus
