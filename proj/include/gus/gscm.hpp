/**
 * @file gscm.hpp
 * @brief Geometry-based stochastic channel model: scenario placement, the
 * large-scale gain terms (visibility region, cluster attenuation, path loss),
 * Rayleigh-faded multipath draws and the ULA channel matrix synthesis.
 */
#pragma once

#include "gus/common.hpp"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gus {

struct ScenarioConfig {
  double cell_half_side = 1000.0;       // R [m], cell is the square [-R, R]^2
  double bs_exclusion_fraction = 0.1;   // no user closer than fraction * R
  double carrier_freq = 2.0e9;          // [Hz]
  std::size_t num_users = 40;
  std::size_t num_clusters = 3;
  std::size_t mpcs_per_cluster = 6;
  double vr_radius = 50.0;              // R_C [m]
  double transition_size = 20.0;        // L_C [m]
  double bs_height = 5.0;
  double ms_height = 1.5;
  double power_decay = 2.0e6;           // k_tau [1/s]
  double cutoff_delay = 10.0e-6;        // tau_B [s]
  // tau_0; unset means the line-of-sight BS-user delay of each link.
  std::optional<double> reference_delay;
  std::size_t antenna_count = 64;
  double antenna_spacing_fraction = 0.5;  // d / lambda
  double shadowing_sigma_db = 3.0;
  double angular_spread_deg = 5.0;        // std-dev of the Laplacian MPC offsets
  double cluster_height_min = 0.0;
  double cluster_height_max = 10.0;
  double visibility_floor = 1e-6;         // A_VR below this leaves C(k)
  std::uint64_t rng_seed = 1;

  double lambda() const { return wavelength(carrier_freq); }

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(std::string("invalid scenario config: ") + what);
    };
    require(cell_half_side > 0.0, "cell_half_side must be > 0");
    require(bs_exclusion_fraction > 0.0 && bs_exclusion_fraction < 1.0,
            "bs_exclusion_fraction must lie in (0, 1)");
    require(carrier_freq > 0.0, "carrier_freq must be > 0");
    require(num_users >= 1, "num_users must be >= 1");
    require(num_clusters >= 1, "num_clusters must be >= 1");
    require(mpcs_per_cluster >= 1, "mpcs_per_cluster must be >= 1");
    require(transition_size > 0.0 && vr_radius > transition_size,
            "need vr_radius > transition_size > 0");
    require(power_decay >= 0.0, "power_decay must be >= 0");
    require(antenna_count >= 1, "antenna_count must be >= 1");
    require(antenna_spacing_fraction > 0.0, "antenna_spacing_fraction must be > 0");
    require(shadowing_sigma_db >= 0.0, "shadowing_sigma_db must be >= 0");
    require(angular_spread_deg >= 0.0, "angular_spread_deg must be >= 0");
    require(cluster_height_max >= cluster_height_min, "cluster height range is empty");
    require(visibility_floor >= 0.0 && visibility_floor < 1.0,
            "visibility_floor must lie in [0, 1)");
    if (reference_delay) {
      require(*reference_delay >= 0.0, "reference_delay must be >= 0");
      require(cutoff_delay >= *reference_delay, "cutoff_delay must be >= reference_delay");
    } else {
      // Per-link tau_0 is at most the LoS delay to the farthest cell corner.
      const double dh = bs_height - ms_height;
      const double far = std::sqrt(2.0 * cell_half_side * cell_half_side + dh * dh);
      require(cutoff_delay >= far / kSpeedOfLight,
              "cutoff_delay must exceed the largest line-of-sight delay in the cell");
    }
  }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct Cluster {
  Vec3 position;
  Vec2 vr_center;
  double delay = 0.0;        // tau_C, single bounce BS -> cluster -> VR centre
  double shadow_gain = 1.0;  // linear power factor
  std::vector<double> mpc_azimuth_offsets;  // per-MPC spread around the cluster azimuth

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

struct Scenario {
  ScenarioConfig config;
  Vec3 bs_position;
  std::vector<Vec3> users;
  std::vector<Cluster> clusters;

  Vec3 vr_center_3d(const Cluster& c) const { return {c.vr_center.x, c.vr_center.y, config.ms_height}; }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Per-link large-scale factors. `path_amplitude` is sqrt of the linear path gain.
struct LinkGains {
  double path_amplitude = 0.0;
  double vr = 0.0;
  double attenuation = 0.0;

  double v_entry() const { return path_amplitude * vr * std::sqrt(attenuation); }
};

struct MpcDraw {
  std::vector<cplx> gains;
  std::vector<double> azimuths;
};

struct ChannelMatrix {
  CMatrix entries;
  std::vector<std::size_t> user_ids;
};

// ---------------------------------------------------------------------------
// Scalar gain terms

/// Transition function of a circular visibility region at MS-to-VR-centre distance d.
inline double vr_gain(double d_ms_vr, double vr_radius, double transition_size, double lambda) {
  if (!(vr_radius > transition_size && transition_size > 0.0 && lambda > 0.0 && d_ms_vr >= 0.0)) {
    throw DomainError("vr_gain: need R_C > L_C > 0, lambda > 0, d >= 0");
  }
  const double arg =
      2.0 * std::sqrt(2.0) * (transition_size + d_ms_vr - vr_radius) / std::sqrt(lambda * transition_size);
  return 0.5 - std::atan(arg) / kPi;
}

inline double cluster_attenuation(double tau_c, double tau_0, double tau_b, double k_tau) {
  if (tau_b < tau_0 || k_tau < 0.0) {
    throw DomainError("cluster_attenuation: need tau_B >= tau_0 and k_tau >= 0");
  }
  return std::max(std::exp(-k_tau * (tau_c - tau_0)), std::exp(-k_tau * (tau_b - tau_0)));
}

struct PathLoss {
  double loss_db;
  double gain_linear;
};

/// NLoS micro-cell path loss, 26 log10(d) + 20 log10(4 pi / lambda).
inline PathLoss path_loss_nlos(double d_bs_ms, double lambda) {
  if (!(d_bs_ms > 0.0) || !(lambda > 0.0)) throw DomainError("path_loss_nlos: need d > 0, lambda > 0");
  const double loss = 26.0 * std::log10(d_bs_ms) + 20.0 * std::log10(4.0 * kPi / lambda);
  return {loss, std::pow(10.0, -loss / 10.0)};
}

/// One MPC amplitude from its factors: L_p * A_VR * sqrt(A_C * A_MPC), with
/// `fading` carrying sqrt(A_MPC) and the MPC phase.
inline cplx mpc_amplitude(double path_amplitude, double a_vr, double a_c, cplx fading) {
  return path_amplitude * a_vr * std::sqrt(a_c) * fading;
}

// ---------------------------------------------------------------------------
// Geometry

inline double single_bounce_delay(Vec3 bs, Vec3 cluster, Vec3 ms) {
  return (distance(bs, cluster) + distance(cluster, ms)) / kSpeedOfLight;
}

inline double azimuth_from(Vec3 from, Vec3 to) { return std::atan2(to.y - from.y, to.x - from.x); }

inline double elevation_from(Vec3 from, Vec3 to) {
  return std::atan2(to.z - from.z, horizontal_distance(from, to));
}

/// tau_0 used for a BS-user link.
inline double link_reference_delay(const ScenarioConfig& cfg, Vec3 bs, Vec3 user) {
  return cfg.reference_delay ? *cfg.reference_delay : distance(bs, user) / kSpeedOfLight;
}

/// Large-scale factors for a user against a cluster at an arbitrary (possibly
/// estimated) position and VR centre. The cluster delay entering A_C is the
/// single-bounce delay of this link, so A_C <= 1 whenever tau_0 is the LoS delay.
inline LinkGains link_gains(const ScenarioConfig& cfg, Vec3 bs, Vec3 user, Vec3 cluster_pos, Vec2 vr_center) {
  LinkGains g;
  g.path_amplitude = std::sqrt(path_loss_nlos(distance(bs, user), cfg.lambda()).gain_linear);
  const double d_vr = std::hypot(user.x - vr_center.x, user.y - vr_center.y);
  g.vr = vr_gain(d_vr, cfg.vr_radius, cfg.transition_size, cfg.lambda());
  g.attenuation = cluster_attenuation(single_bounce_delay(bs, cluster_pos, user),
                                      link_reference_delay(cfg, bs, user), cfg.cutoff_delay, cfg.power_decay);
  return g;
}

inline LinkGains link_gains(const Scenario& s, std::size_t user, std::size_t cluster) {
  const Cluster& c = s.clusters.at(cluster);
  return link_gains(s.config, s.bs_position, s.users.at(user), c.position, c.vr_center);
}

// ---------------------------------------------------------------------------
// Scenario generation

namespace detail {

inline double laplace_sample(std::mt19937_64& rng, double stddev) {
  if (stddev == 0.0) return 0.0;
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double v = u(rng);
  const double b = stddev / std::sqrt(2.0);
  return -b * (v < 0.0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(v));
}

}  // namespace detail

inline Scenario generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  constexpr int kMaxAttempts = 10000;

  std::mt19937_64 rng(derive_seed(cfg.rng_seed, Stream::kPlacement));
  std::uniform_real_distribution<double> in_cell(-cfg.cell_half_side, cfg.cell_half_side);
  std::uniform_real_distribution<double> cluster_z(cfg.cluster_height_min, cfg.cluster_height_max);
  std::normal_distribution<double> normal(0.0, 1.0);

  Scenario s;
  s.config = cfg;
  s.bs_position = {0.0, 0.0, cfg.bs_height};

  const double r_min = cfg.bs_exclusion_fraction * cfg.cell_half_side;
  s.users.reserve(cfg.num_users);
  for (std::size_t k = 0; k < cfg.num_users; ++k) {
    int attempt = 0;
    for (;; ++attempt) {
      if (attempt == kMaxAttempts) {
        throw ConfigError("generate_scenario: user placement failed, exclusion disk covers the cell");
      }
      const Vec3 p{in_cell(rng), in_cell(rng), cfg.ms_height};
      if (std::hypot(p.x, p.y) >= r_min) {
        s.users.push_back(p);
        break;
      }
    }
  }

  const double spread = cfg.angular_spread_deg * kPi / 180.0;
  s.clusters.reserve(cfg.num_clusters);
  for (std::size_t j = 0; j < cfg.num_clusters; ++j) {
    Cluster c;
    c.position = {in_cell(rng), in_cell(rng), cluster_z(rng)};
    c.vr_center = {in_cell(rng), in_cell(rng)};
    c.delay = single_bounce_delay(s.bs_position, c.position, s.vr_center_3d(c));
    c.shadow_gain = db_to_linear(cfg.shadowing_sigma_db * normal(rng));
    c.mpc_azimuth_offsets.resize(cfg.mpcs_per_cluster);
    for (double& off : c.mpc_azimuth_offsets) off = detail::laplace_sample(rng, spread);
    s.clusters.push_back(std::move(c));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Small-scale draws and channel synthesis

/// Complex circular Gaussian MPC fading with expected power 1/N_p per MPC.
/// Each (user, cluster, realization) has its own stream derived from the
/// scenario seed, so a link's draw is independent of which users are selected.
inline std::vector<cplx> mpc_fading(const Scenario& s, std::size_t user, std::size_t cluster,
                                    std::uint64_t realization = 0) {
  const std::size_t np = s.config.mpcs_per_cluster;
  std::mt19937_64 rng(derive_seed(s.config.rng_seed, Stream::kFading, user, cluster, realization));
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5 / static_cast<double>(np)));
  std::vector<cplx> out(np);
  for (cplx& g : out) {
    const double re = normal(rng);
    const double im = normal(rng);
    g = {re, im};
  }
  return out;
}

inline MpcDraw mpc_amplitudes(const Scenario& s, std::size_t user, std::size_t cluster,
                              std::uint64_t realization = 0) {
  const Cluster& c = s.clusters.at(cluster);
  const LinkGains g = link_gains(s, user, cluster);
  const double base_az = azimuth_from(s.bs_position, c.position);
  const std::vector<cplx> fading = mpc_fading(s, user, cluster, realization);
  const double shadow = std::sqrt(c.shadow_gain);

  MpcDraw d;
  d.gains.reserve(fading.size());
  d.azimuths.reserve(fading.size());
  for (std::size_t i = 0; i < fading.size(); ++i) {
    d.gains.push_back(shadow * mpc_amplitude(g.path_amplitude, g.vr, g.attenuation, fading[i]));
    d.azimuths.push_back(base_az + c.mpc_azimuth_offsets[i]);
  }
  return d;
}

/// ULA response, element m = exp(j * alpha * m * sin(phi)) with alpha = -2 pi d / lambda.
inline CVector steering_vector(double phi, std::size_t m, double d_over_lambda) {
  const double alpha = -2.0 * kPi * d_over_lambda;
  CVector a(static_cast<Eigen::Index>(m));
  const double step = alpha * std::sin(phi);
  for (std::size_t i = 0; i < m; ++i) a(static_cast<Eigen::Index>(i)) = std::polar(1.0, step * static_cast<double>(i));
  return a;
}

/// Sum over clusters and MPCs of gain * steering vector.
inline CVector column_from_draws(std::span<const MpcDraw> draws, std::size_t m, double d_over_lambda) {
  CVector col = CVector::Zero(static_cast<Eigen::Index>(m));
  for (const MpcDraw& d : draws) {
    for (std::size_t i = 0; i < d.gains.size(); ++i) {
      col += d.gains[i] * steering_vector(d.azimuths[i], m, d_over_lambda);
    }
  }
  return col;
}

/// C(k): clusters whose visibility gain for the user is above the floor.
inline std::vector<std::size_t> visible_clusters(const Scenario& s, std::size_t user) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < s.clusters.size(); ++j) {
    if (link_gains(s, user, j).vr > s.config.visibility_floor) out.push_back(j);
  }
  return out;
}

inline ChannelMatrix channel_matrix(const Scenario& s, std::span<const std::size_t> selected,
                                    std::uint64_t realization = 0) {
  if (selected.empty()) throw DomainError("channel_matrix: empty selection");
  for (std::size_t a = 0; a < selected.size(); ++a) {
    if (selected[a] >= s.users.size()) throw DomainError("channel_matrix: user index out of range");
    for (std::size_t b = a + 1; b < selected.size(); ++b) {
      if (selected[a] == selected[b]) throw DomainError("channel_matrix: duplicate user index");
    }
  }
  const std::size_t m = s.config.antenna_count;
  ChannelMatrix h;
  h.entries.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(selected.size()));
  h.user_ids.assign(selected.begin(), selected.end());
  for (std::size_t k = 0; k < selected.size(); ++k) {
    std::vector<MpcDraw> draws;
    for (std::size_t j : visible_clusters(s, selected[k])) draws.push_back(mpc_amplitudes(s, selected[k], j, realization));
    h.entries.col(static_cast<Eigen::Index>(k)) = column_from_draws(draws, m, s.config.antenna_spacing_fraction);
  }
  return h;
}

/// Channel of every user in the scenario, columns in user order.
inline ChannelMatrix full_channel(const Scenario& s, std::uint64_t realization = 0) {
  std::vector<std::size_t> all(s.users.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return channel_matrix(s, all, realization);
}

}  // namespace gus
