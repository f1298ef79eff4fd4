/**
 * @file rx_rate.hpp
 * @brief Uplink receiver side: noise power, channel covariance, Bayesian MMSE
 * channel estimation from pilots, ZF receiver synthesis, sum-rate and
 * ergodic capacity.
 */
#pragma once

#include "gus/common.hpp"
#include "gus/gscm.hpp"

#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

namespace gus {

/// Thermal noise power BW * k_B * T0 * NF in watts.
inline double noise_power(double bandwidth_hz, double temperature_k, double noise_figure_db) {
  if (!(bandwidth_hz > 0.0) || !(temperature_k > 0.0)) {
    throw DomainError("noise_power: bandwidth and temperature must be positive");
  }
  return bandwidth_hz * kBoltzmann * temperature_k * db_to_linear(noise_figure_db);
}

struct PowerConfig {
  double total_power = 1.0;  // P [W], split equally over the scheduled users
  double noise_power = 1.0;  // P_n [W]

  double per_user(std::size_t scheduled) const { return total_power / static_cast<double>(scheduled); }
};

enum class NoiseModel {
  kPhysical,       // ZF noise enhancement P_n * ||w_k||^2 in the denominator
  kPaperLiteral,   // unit noise term, exactly as the printed rate expression
};

struct PilotConfig {
  CMatrix pilots;               // K_s x tau_p
  double noise_variance = 1.0;  // sigma_n^2

  Eigen::Index users() const { return pilots.rows(); }
  Eigen::Index length() const { return pilots.cols(); }
};

/// Scaled DFT pilots with tau_p = K_s: rows are orthogonal and each row
/// carries `per_user_power` per symbol.
inline PilotConfig orthogonal_pilots(std::size_t users, double per_user_power, double noise_variance) {
  const auto n = static_cast<Eigen::Index>(users);
  PilotConfig p;
  p.pilots.resize(n, n);
  const double amp = std::sqrt(per_user_power);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      p.pilots(r, c) = std::polar(amp, -2.0 * kPi * static_cast<double>(r * c) / static_cast<double>(n));
    }
  }
  p.noise_variance = noise_variance;
  return p;
}

inline CVector vectorize(const CMatrix& m) { return m.reshaped(); }

inline CMatrix unvectorize(const CVector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw DomainError("unvectorize: size mismatch");
  return v.reshaped(rows, cols);
}

/// Sample mean of h h^H over the given vectorized channels.
inline CMatrix channel_covariance(std::span<const CVector> samples) {
  if (samples.empty()) throw DomainError("channel_covariance: no samples");
  const Eigen::Index n = samples.front().size();
  CMatrix r = CMatrix::Zero(n, n);
  for (const CVector& h : samples) {
    if (h.size() != n) throw DomainError("channel_covariance: samples differ in length");
    r.selfadjointView<Eigen::Lower>().rankUpdate(h);
  }
  r /= static_cast<double>(samples.size());
  // rankUpdate fills the lower triangle only.
  return r.selfadjointView<Eigen::Lower>();
}

/// Phi_p^T kron I_M, the pilot operator acting on vec(H).
inline CMatrix pilot_operator(const PilotConfig& pilot, Eigen::Index antennas) {
  const Eigen::Index k = pilot.users();
  const Eigen::Index tau = pilot.length();
  CMatrix op = CMatrix::Zero(tau * antennas, k * antennas);
  for (Eigen::Index t = 0; t < tau; ++t) {
    for (Eigen::Index u = 0; u < k; ++u) {
      const cplx phi = pilot.pilots(u, t);
      for (Eigen::Index m = 0; m < antennas; ++m) op(t * antennas + m, u * antennas + m) = phi;
    }
  }
  return op;
}

/// Bayesian MMSE estimate of vec(H) from Y = H Phi_p + N:
/// R Phi~^H (Phi~ R Phi~^H + sigma^2 I)^-1 vec(Y).
inline CVector mmse_estimate(const CMatrix& received, const PilotConfig& pilot, const CMatrix& covariance) {
  const Eigen::Index m = received.rows();
  if (pilot.length() < 1) throw DomainError("mmse_estimate: empty pilot");
  if (received.cols() != pilot.length()) throw DomainError("mmse_estimate: Y columns must equal tau_p");
  if (covariance.rows() != m * pilot.users() || covariance.cols() != covariance.rows()) {
    throw DomainError("mmse_estimate: covariance must be MK x MK");
  }
  const CMatrix op = pilot_operator(pilot, m);
  const CMatrix r_opH = covariance * op.adjoint();
  CMatrix inner = op * r_opH;
  inner.diagonal().array() += pilot.noise_variance;

  Eigen::LDLT<CMatrix> ldlt(inner);
  const double rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
  if (!(rcond > 1e-14)) {
    std::ostringstream msg;
    msg << "mmse_estimate: singular pilot observation matrix (rcond " << rcond << ")";
    throw SingularityError(msg.str(), rcond > 0.0 ? 1.0 / rcond : INFINITY);
  }
  return r_opH * ldlt.solve(vectorize(received));
}

struct ZfReceiver {
  CMatrix weights;  // K_s x M
};

/// Pseudo-inverse (H^H H)^-1 H^H, evaluated through the SVD so that the
/// identity W H = I holds to working precision for well-conditioned H.
inline ZfReceiver zf_weights(const CMatrix& h, double max_condition = 1e12) {
  if (h.cols() == 0) throw DomainError("zf_weights: empty channel");
  if (h.rows() < h.cols()) throw DomainError("zf_weights: need M >= K_s");
  Eigen::JacobiSVD<CMatrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  const double cond = smin > 0.0 ? smax / smin : INFINITY;
  if (!(smax > 0.0) || !(cond <= max_condition)) {
    std::ostringstream msg;
    msg << "zf_weights: channel is rank deficient (condition number " << cond << ", limit " << max_condition << ")";
    throw SingularityError(msg.str(), cond);
  }
  ZfReceiver w;
  w.weights = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().adjoint();
  return w;
}

inline ZfReceiver zf_weights(const ChannelMatrix& h) { return zf_weights(h.entries); }

/// Per-user SINR of a linear receiver W applied to the true channel H.
inline RVector sinr(const CMatrix& h, const ZfReceiver& w, const PowerConfig& power,
                    NoiseModel mode = NoiseModel::kPhysical) {
  const Eigen::Index ks = h.cols();
  if (w.weights.rows() != ks || w.weights.cols() != h.rows()) throw DomainError("sum_rate: W and H disagree");
  const double pk = power.per_user(static_cast<std::size_t>(ks));
  const CMatrix g = w.weights * h;  // g(k, i) = w_k h_i
  RVector out(ks);
  for (Eigen::Index k = 0; k < ks; ++k) {
    double interference = 0.0;
    for (Eigen::Index i = 0; i < ks; ++i) {
      if (i != k) interference += pk * std::norm(g(k, i));
    }
    const double noise = mode == NoiseModel::kPhysical ? power.noise_power * w.weights.row(k).squaredNorm() : 1.0;
    out(k) = pk * std::norm(g(k, k)) / (noise + interference);
  }
  return out;
}

/// Sum over scheduled users of log2(1 + SINR_k) [bits/s/Hz].
inline double sum_rate(const CMatrix& h, const ZfReceiver& w, const PowerConfig& power,
                       NoiseModel mode = NoiseModel::kPhysical) {
  if (power.total_power == 0.0) return 0.0;
  const RVector s = sinr(h, w, power, mode);
  double r = 0.0;
  for (Eigen::Index k = 0; k < s.size(); ++k) r += std::log2(1.0 + s(k));
  return r;
}

inline double sum_rate(const ChannelMatrix& h, const ZfReceiver& w, const PowerConfig& power,
                       NoiseModel mode = NoiseModel::kPhysical) {
  return sum_rate(h.entries, w, power, mode);
}

/// log2 det(I + (P / K_s) H H^H / P_n) for one realization, computed on the
/// K_s x K_s side of the determinant identity.
inline double capacity(const CMatrix& h, const PowerConfig& power) {
  const Eigen::Index ks = h.cols();
  if (ks == 0) throw DomainError("capacity: empty channel");
  if (power.total_power == 0.0) return 0.0;
  const double snr = power.per_user(static_cast<std::size_t>(ks)) / power.noise_power;
  CMatrix a = snr * (h.adjoint() * h);
  a.diagonal().array() += 1.0;
  Eigen::LLT<CMatrix> llt(a);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < ks; ++i) logdet += std::log2(std::real(llt.matrixL()(i, i)));
  return 2.0 * logdet;
}

inline double ergodic_capacity(std::span<const CMatrix> samples, const PowerConfig& power) {
  if (samples.empty()) throw DomainError("ergodic_capacity: no samples");
  double acc = 0.0;
  for (const CMatrix& h : samples) acc += capacity(h, power);
  return acc / static_cast<double>(samples.size());
}

inline double ergodic_capacity(std::span<const ChannelMatrix> samples, const PowerConfig& power) {
  if (samples.empty()) throw DomainError("ergodic_capacity: no samples");
  double acc = 0.0;
  for (const ChannelMatrix& h : samples) acc += capacity(h.entries, power);
  return acc / static_cast<double>(samples.size());
}

}  // namespace gus
