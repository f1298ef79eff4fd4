/**
 * @file scheduler.hpp
 * @brief User scheduling: the user-cluster pathloss matrix V, geometry-based
 * user scheduling (GUS) on V, the full-CSI greedy baseline (GWC), uniform
 * random selection, and the channel-estimation load metric.
 */
#pragma once

#include "gus/common.hpp"
#include "gus/gscm.hpp"
#include "gus/rx_rate.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gus {

/// K x N_C matrix of large-scale user-cluster gains, row k for user k.
using VMatrix = RMatrix;

struct ScheduleResult {
  std::vector<std::size_t> selected;    // pick order
  std::vector<double> per_step_scores;  // GUS: norm, then correlations; GWC: objective
  std::vector<std::size_t> excluded;    // candidates dropped before selection (zero V rows)
};

/// Reference row used at each GUS correlation step.
enum class GusVariant {
  kLastSelected,  // the most recently selected row only
  kSelectedSet,   // worst case over every selected row
};

/// V from geometry alone: v = sqrt(L_p) * A_VR * sqrt(A_C), no fading.
inline VMatrix build_v_matrix(const Scenario& s) {
  VMatrix v(static_cast<Eigen::Index>(s.users.size()), static_cast<Eigen::Index>(s.clusters.size()));
  for (std::size_t k = 0; k < s.users.size(); ++k) {
    for (std::size_t j = 0; j < s.clusters.size(); ++j) {
      v(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = link_gains(s, k, j).v_entry();
    }
  }
  return v;
}

/// |v_k . v_j*| / (||v_k|| ||v_j||).
template <typename RowA, typename RowB>
double correlation_metric(const Eigen::MatrixBase<RowA>& a, const Eigen::MatrixBase<RowB>& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw DomainError("correlation_metric: zero row");
  if (a.size() != b.size()) throw DomainError("correlation_metric: length mismatch");
  const double c = std::abs(a.dot(b)) / (na * nb);
  return std::min(c, 1.0);
}

inline ScheduleResult gus_select(const VMatrix& v, std::size_t num_selected,
                                 GusVariant variant = GusVariant::kLastSelected) {
  const auto k_total = static_cast<std::size_t>(v.rows());
  if (num_selected == 0) throw DomainError("gus_select: K_s must be >= 1");
  if (num_selected > k_total) throw DomainError("gus_select: K_s exceeds the number of users");

  ScheduleResult res;
  std::vector<std::size_t> candidates;
  for (std::size_t k = 0; k < k_total; ++k) {
    if (v.row(static_cast<Eigen::Index>(k)).norm() > 0.0) {
      candidates.push_back(k);
    } else {
      res.excluded.push_back(k);
    }
  }
  if (candidates.size() < num_selected) {
    throw InfeasibleSelection("gus_select: only " + std::to_string(candidates.size()) +
                              " users see any cluster, " + std::to_string(num_selected) + " requested");
  }

  auto row = [&](std::size_t k) { return v.row(static_cast<Eigen::Index>(k)); };
  auto take = [&](std::size_t pos, double score) {
    res.selected.push_back(candidates[pos]);
    res.per_step_scores.push_back(score);
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pos));
  };

  // Strict comparisons keep the lowest index on ties.
  std::size_t best = 0;
  double best_norm = row(candidates[0]).norm();
  for (std::size_t p = 1; p < candidates.size(); ++p) {
    const double n = row(candidates[p]).norm();
    if (n > best_norm) {
      best_norm = n;
      best = p;
    }
  }
  take(best, best_norm);

  while (res.selected.size() < num_selected) {
    std::size_t pick = 0;
    double pick_corr = INFINITY;
    for (std::size_t p = 0; p < candidates.size(); ++p) {
      double c = 0.0;
      if (variant == GusVariant::kLastSelected) {
        c = correlation_metric(row(candidates[p]), row(res.selected.back()));
      } else {
        for (std::size_t s : res.selected) c = std::max(c, correlation_metric(row(candidates[p]), row(s)));
      }
      if (c < pick_corr) {
        pick_corr = c;
        pick = p;
      }
    }
    take(pick, pick_corr);
  }
  return res;
}

/// Physical-mode ZF sum-rate of the given columns of a full channel, or
/// nullopt when ZF is undefined for that set.
inline std::optional<double> zf_set_rate(const CMatrix& h_all, std::span<const std::size_t> set,
                                         const PowerConfig& power) {
  CMatrix h(h_all.rows(), static_cast<Eigen::Index>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) h.col(static_cast<Eigen::Index>(i)) = h_all.col(static_cast<Eigen::Index>(set[i]));
  try {
    return sum_rate(h, zf_weights(h), power, NoiseModel::kPhysical);
  } catch (const SingularityError&) {
    return std::nullopt;
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

/// Greedy full-CSI scheduling: start from the strongest column, then add the
/// user that maximizes the ZF sum-rate of the tentative set.
inline ScheduleResult gwc_select(const CMatrix& h_all, std::size_t num_selected, const PowerConfig& power) {
  const auto k_total = static_cast<std::size_t>(h_all.cols());
  if (num_selected == 0) throw DomainError("gwc_select: K_s must be >= 1");
  if (num_selected > k_total) throw DomainError("gwc_select: K_s exceeds the number of users");

  ScheduleResult res;
  std::vector<std::size_t> remaining(k_total);
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});

  std::size_t first = 0;
  double first_norm = -1.0;
  for (std::size_t k = 0; k < k_total; ++k) {
    const double n = h_all.col(static_cast<Eigen::Index>(k)).norm();
    if (n > first_norm) {
      first_norm = n;
      first = k;
    }
  }
  if (!(first_norm > 0.0)) throw InfeasibleSelection("gwc_select: every channel column is zero");
  res.selected.push_back(first);
  remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(first));
  res.per_step_scores.push_back(zf_set_rate(h_all, res.selected, power).value_or(0.0));

  std::vector<std::size_t> trial = res.selected;
  while (res.selected.size() < num_selected) {
    std::optional<std::size_t> best_pos;
    double best_rate = -INFINITY;
    for (std::size_t p = 0; p < remaining.size(); ++p) {
      trial.push_back(remaining[p]);
      const std::optional<double> r = zf_set_rate(h_all, trial, power);
      trial.pop_back();
      if (r && *r > best_rate) {
        best_rate = *r;
        best_pos = p;
      }
    }
    if (!best_pos) {
      throw InfeasibleSelection("gwc_select: ZF undefined for every remaining candidate after " +
                                std::to_string(res.selected.size()) + " users");
    }
    res.selected.push_back(remaining[*best_pos]);
    res.per_step_scores.push_back(best_rate);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(*best_pos));
    trial = res.selected;
  }
  return res;
}

inline ScheduleResult gwc_select(const ChannelMatrix& h_all, std::size_t num_selected, const PowerConfig& power) {
  return gwc_select(h_all.entries, num_selected, power);
}

/// Uniform K_s-subset without replacement, in draw order.
inline ScheduleResult random_select(std::size_t num_users, std::size_t num_selected, std::uint64_t seed) {
  if (num_selected > num_users) throw DomainError("random_select: K_s exceeds K");
  std::vector<std::size_t> pool(num_users);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, Stream::kRandomSchedule));
  ScheduleResult res;
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < num_selected; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, num_users - 1);
    std::swap(pool[i], pool[pick(rng)]);
    res.selected.push_back(pool[i]);
    res.per_step_scores.push_back(0.0);
  }
  return res;
}

/// Pilot-based estimation load 2 * M * (number of users whose channels are estimated).
inline std::uint64_t estimation_load(std::uint64_t antennas, std::uint64_t users_estimated) {
  if (antennas == 0 || users_estimated == 0) throw DomainError("estimation_load: counts must be positive");
  return 2 * antennas * users_estimated;
}

}  // namespace gus
