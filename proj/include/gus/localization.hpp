/**
 * @file localization.hpp
 * @brief Cluster localization errors: CRLBs of delay/elevation/azimuth
 * estimates, single-bounce inversion of a (delay, angles) measurement to a
 * scatterer distance, and CRLB-scaled perturbation of the cluster map that
 * yields the estimated pathloss matrix V~ and the error E = V - V~.
 *
 * Angle conventions. Cluster measurements are taken at the BS. Elevation is
 * the angle above the horizontal plane through the BS; azimuth in
 * `solve_cluster_distance` is measured from the horizontal BS -> MS
 * direction. The field pattern and CRLBs take the absolute azimuth against
 * the array broadside (+x).
 */
#pragma once

#include "gus/common.hpp"
#include "gus/gscm.hpp"
#include "gus/scheduler.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace gus {

enum class FieldPatternForm {
  kPrinted,  // 0.67 + 2.67x - 6.79x^2 + 5.7x^3 - 1.71x^3
  kQuartic,  // last term read as -1.71x^4
};

inline double field_pattern(double phi, FieldPatternForm form = FieldPatternForm::kPrinted) {
  const double p2 = phi * phi;
  const double p3 = p2 * phi;
  const double last = form == FieldPatternForm::kPrinted ? p3 : p3 * phi;
  return 0.67 + 2.67 * phi - 6.79 * p2 + 5.7 * p3 - 1.71 * last;
}

struct CrlbParams {
  std::size_t antennas = 64;        // M
  std::size_t sensors_per_dir = 5;  // M_x
  std::size_t periods = 1;          // I
  std::size_t pn_length = 127;      // N_c
  double input_snr = 100.0;         // gamma_I, linear
  double bandwidth = 20e6;          // [Hz]
  double d_over_lambda = 0.5;
  FieldPatternForm pattern = FieldPatternForm::kPrinted;
};

struct Crlb {
  double delay;      // [s^2]
  double elevation;  // [rad^2]
  double azimuth;    // [rad^2]
};

/// Delta = 4 pi^2 (d/lambda)^2 (7/3 Mx^3 - 8 Mx^2 + 29/3 Mx - 4). The cubic is
/// evaluated over a common denominator so its integer root Mx = 1 is exact.
inline double array_delta(std::size_t sensors_per_dir, double d_over_lambda) {
  const auto mx = static_cast<std::int64_t>(sensors_per_dir);
  const std::int64_t cubic3 = 7 * mx * mx * mx - 24 * mx * mx + 29 * mx - 12;
  return 4.0 * kPi * kPi * d_over_lambda * d_over_lambda * static_cast<double>(cubic3) / 3.0;
}

/// gamma_O = M I N_c |f(phi)|^2 gamma_I.
inline double output_snr(const CrlbParams& p, double azimuth) {
  const double f = field_pattern(azimuth, p.pattern);
  return static_cast<double>(p.antennas) * static_cast<double>(p.periods) * static_cast<double>(p.pn_length) * f * f *
         p.input_snr;
}

/// Closed-form bounds for given output SNR and array term. A zero array term
/// or zero SNR yields +inf for the affected bounds.
inline Crlb crlb_from_snr(double gamma_o, double bandwidth, std::size_t antennas, double delta, double elevation) {
  const double c = std::cos(elevation);
  if (std::abs(c) < 1e-12) throw DomainError("crlb: elevation at +-pi/2 makes the elevation bound singular");
  const double m = static_cast<double>(antennas);
  Crlb out;
  out.delay = 1.0 / (gamma_o * 8.0 * kPi * kPi * bandwidth);
  out.elevation = m / (2.0 * delta * c * gamma_o);
  out.azimuth = m / (2.0 * delta * gamma_o);
  if (delta == 0.0 || gamma_o == 0.0) {
    out.elevation = INFINITY;
    out.azimuth = INFINITY;
  }
  if (gamma_o == 0.0) out.delay = INFINITY;
  return out;
}

inline Crlb crlb(const CrlbParams& p, double azimuth, double elevation) {
  if (p.antennas == 0 || p.sensors_per_dir == 0 || p.periods == 0 || p.pn_length == 0 || !(p.input_snr > 0.0) ||
      !(p.bandwidth > 0.0) || !(p.d_over_lambda > 0.0)) {
    throw DomainError("crlb: parameters must be positive");
  }
  return crlb_from_snr(output_snr(p, azimuth), p.bandwidth, p.antennas, array_delta(p.sensors_per_dir, p.d_over_lambda),
                       elevation);
}

// ---------------------------------------------------------------------------
// Single-bounce inversion

enum class ClosureForm {
  // Full 3D path-length closure. Includes the cross-range term d cos(el) sin(az),
  // which makes the closure linear in d_BS,C (one root).
  kExact,
  // The closure without the cross-range term. Quadratic in d_BS,C unless az = 0,
  // where it coincides with kExact.
  kPrinted,
};

enum class RootChoice { kSmallest, kAlternate };

struct ClusterDistances {
  double bs_cluster;
  double ms_cluster;
};

/// Distance BS -> scatterer from total path length c0 * tau, elevation and
/// azimuth (relative to the BS -> MS direction) of the path at the BS.
inline ClusterDistances solve_cluster_distance(double tau, double elevation, double azimuth, double h_bs, double h_ms,
                                               double d_bs_ms, ClosureForm form = ClosureForm::kExact,
                                               RootChoice choice = RootChoice::kSmallest) {
  const double len = kSpeedOfLight * tau;
  const double dh = h_bs - h_ms;
  const double direct_sq = d_bs_ms * d_bs_ms + dh * dh;
  if (!std::isfinite(len) || !(len * len > direct_sq)) {
    throw GeometryError("solve_cluster_distance: path length does not exceed the direct BS-MS distance");
  }
  const double se = std::sin(elevation);
  const double ce = std::cos(elevation);
  const double along = ce * std::cos(azimuth);

  // a2 d^2 + a1 d + a0 = 0
  const double a2 = form == ClosureForm::kExact ? 0.0 : ce * ce * std::pow(std::sin(azimuth), 2);
  const double a1 = -2.0 * (len + dh * se - d_bs_ms * along);
  const double a0 = len * len - direct_sq;

  std::vector<double> roots;
  if (std::abs(a2) <= 1e-15 * std::abs(a1)) {
    roots.push_back(-a0 / a1);
  } else {
    const double disc = a1 * a1 - 4.0 * a2 * a0;
    if (disc >= 0.0) {
      // Cancellation-free pair.
      const double q = -0.5 * (a1 + std::copysign(std::sqrt(disc), a1));
      roots.push_back(q / a2);
      if (q != 0.0) roots.push_back(a0 / q);
    }
  }
  std::vector<double> admissible;
  for (double d : roots) {
    if (std::isfinite(d) && d > 0.0 && d < len) admissible.push_back(d);
  }
  if (admissible.empty()) throw GeometryError("solve_cluster_distance: no admissible scatterer distance");
  std::sort(admissible.begin(), admissible.end());
  const double d = choice == RootChoice::kAlternate ? admissible.back() : admissible.front();
  return {d, len - d};
}

// ---------------------------------------------------------------------------
// Perturbed cluster map

/// What the BS measures for a cluster: the single-bounce path through the
/// cluster towards its VR centre.
struct ClusterMeasurement {
  double delay = 0.0;
  double elevation = 0.0;
  double azimuth = 0.0;       // relative to the BS -> VR-centre direction
  double vr_azimuth = 0.0;    // absolute azimuth of the VR centre
  double d_bs_vr = 0.0;       // horizontal BS -> VR-centre distance
};

struct MeasurementError {
  double delay = 0.0;
  double elevation = 0.0;
  double azimuth = 0.0;

  bool is_zero() const { return delay == 0.0 && elevation == 0.0 && azimuth == 0.0; }
};

inline ClusterMeasurement measure_cluster(const Scenario& s, std::size_t cluster) {
  const Cluster& c = s.clusters.at(cluster);
  const Vec3 vr = s.vr_center_3d(c);
  ClusterMeasurement m;
  m.delay = c.delay;
  m.elevation = elevation_from(s.bs_position, c.position);
  m.vr_azimuth = azimuth_from(s.bs_position, vr);
  m.azimuth = std::remainder(azimuth_from(s.bs_position, c.position) - m.vr_azimuth, 2.0 * kPi);
  m.d_bs_vr = horizontal_distance(s.bs_position, vr);
  return m;
}

/// Scatterer position implied by a (possibly erroneous) measurement.
inline Vec3 locate_cluster(const Scenario& s, const ClusterMeasurement& m, const MeasurementError& e,
                           ClosureForm form = ClosureForm::kExact) {
  const double el = m.elevation + e.elevation;
  const double az = m.azimuth + e.azimuth;
  const ClusterDistances d = solve_cluster_distance(m.delay + e.delay, el, az, s.config.bs_height,
                                                    s.config.ms_height, m.d_bs_vr, form);
  const double abs_az = m.vr_azimuth + az;
  const Vec3 dir{std::cos(el) * std::cos(abs_az), std::cos(el) * std::sin(abs_az), std::sin(el)};
  return s.bs_position + d.bs_cluster * dir;
}

/// V evaluated against an arbitrary cluster map (positions and VR centres).
inline VMatrix v_matrix_from_geometry(const Scenario& s, std::span<const Vec3> cluster_positions,
                                      std::span<const Vec2> vr_centers) {
  VMatrix v(static_cast<Eigen::Index>(s.users.size()), static_cast<Eigen::Index>(cluster_positions.size()));
  for (std::size_t k = 0; k < s.users.size(); ++k) {
    for (std::size_t j = 0; j < cluster_positions.size(); ++j) {
      v(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          link_gains(s.config, s.bs_position, s.users[k], cluster_positions[j], vr_centers[j]).v_entry();
    }
  }
  return v;
}

struct PerturbedGeometry {
  std::vector<Vec3> cluster_positions;
  std::vector<Vec2> vr_centers;
  std::vector<MeasurementError> errors;
  VMatrix v_tilde;
  VMatrix error;  // V - V~
  std::size_t fallbacks = 0;  // clusters kept at their true position (infeasible inversion)
};

/// Rebuild the cluster map from measurements carrying the given errors. A
/// cluster with a zero error keeps its true position; the VR centre moves
/// with its cluster.
inline PerturbedGeometry rebuild_with_errors(const Scenario& s, std::span<const MeasurementError> errors,
                                             ClosureForm form = ClosureForm::kExact) {
  if (errors.size() != s.clusters.size()) throw DomainError("rebuild_with_errors: one error per cluster required");
  PerturbedGeometry g;
  g.errors.assign(errors.begin(), errors.end());
  for (std::size_t j = 0; j < s.clusters.size(); ++j) {
    const Cluster& c = s.clusters[j];
    Vec3 pos = c.position;
    if (!errors[j].is_zero()) {
      try {
        pos = locate_cluster(s, measure_cluster(s, j), errors[j], form);
      } catch (const GeometryError&) {
        ++g.fallbacks;
      }
    }
    const Vec3 shift = pos - c.position;
    g.cluster_positions.push_back(pos);
    g.vr_centers.push_back({c.vr_center.x + shift.x, c.vr_center.y + shift.y});
  }
  g.v_tilde = v_matrix_from_geometry(s, g.cluster_positions, g.vr_centers);
  g.error = build_v_matrix(s) - g.v_tilde;
  return g;
}

/// Errors of magnitude omega * sqrt(CRLB) with independent seeded signs, per
/// cluster and per measured quantity. Signs depend on (seed, cluster) only, so
/// the same seed gives the same error direction for every omega.
inline std::vector<MeasurementError> crlb_errors(const Scenario& s, unsigned omega, const CrlbParams& params,
                                                 std::uint64_t seed) {
  std::vector<MeasurementError> out(s.clusters.size());
  if (omega == 0) return out;
  const double w = static_cast<double>(omega);
  for (std::size_t j = 0; j < s.clusters.size(); ++j) {
    std::mt19937_64 rng(derive_seed(seed, Stream::kPerturbation, j));
    std::bernoulli_distribution coin(0.5);
    const double s_tau = coin(rng) ? 1.0 : -1.0;
    const double s_el = coin(rng) ? 1.0 : -1.0;
    const double s_az = coin(rng) ? 1.0 : -1.0;
    const Vec3& p = s.clusters[j].position;
    const Crlb b = crlb(params, azimuth_from(s.bs_position, p), elevation_from(s.bs_position, p));
    out[j] = {s_tau * w * std::sqrt(b.delay), s_el * w * std::sqrt(b.elevation), s_az * w * std::sqrt(b.azimuth)};
  }
  return out;
}

inline PerturbedGeometry perturb_and_rebuild(const Scenario& s, unsigned omega, const CrlbParams& params,
                                             std::uint64_t seed, ClosureForm form = ClosureForm::kExact) {
  const std::vector<MeasurementError> errors = crlb_errors(s, omega, params, seed);
  return rebuild_with_errors(s, errors, form);
}

inline PerturbedGeometry perturb_and_rebuild(const Scenario& s, unsigned omega, const CrlbParams& params) {
  return perturb_and_rebuild(s, omega, params, s.config.rng_seed);
}

}  // namespace gus
