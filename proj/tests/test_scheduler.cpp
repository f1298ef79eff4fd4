#include "gus/scheduler.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace gus;

namespace {

VMatrix rows(std::initializer_list<std::initializer_list<double>> r) {
  VMatrix v(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double x : row) v(i, j++) = x;
    ++i;
  }
  return v;
}

CMatrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  CMatrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = n(rng);
      const double im = n(rng);
      m(r, c) = {re, im};
    }
  }
  return m;
}

Scenario two_by_two(double k_tau) {
  ScenarioConfig cfg;
  cfg.num_users = 2;
  cfg.num_clusters = 2;
  cfg.power_decay = k_tau;
  Scenario s;
  s.config = cfg;
  s.bs_position = {0.0, 0.0, cfg.bs_height};
  s.users = {{400.0, 100.0, 1.5}, {-300.0, 500.0, 1.5}};
  const std::vector<std::pair<Vec3, Vec2>> cl{{{350.0, 150.0, 7.0}, {380.0, 120.0}}, {{-250.0, 420.0, 2.0}, {-330.0, 470.0}}};
  for (const auto& [p, vr] : cl) {
    Cluster c;
    c.position = p;
    c.vr_center = vr;
    c.delay = single_bounce_delay(s.bs_position, p, {vr.x, vr.y, cfg.ms_height});
    c.mpc_azimuth_offsets.assign(cfg.mpcs_per_cluster, 0.0);
    s.clusters.push_back(c);
  }
  return s;
}

}  // namespace

TEST(BuildV, HalfVisibilityWithoutDecay) {
  Scenario s = two_by_two(0.0);
  // Put user 0 exactly R_C - L_C = 30 m from VR 0.
  s.users[0] = {380.0 + 30.0, 120.0, 1.5};
  const VMatrix v = build_v_matrix(s);
  const double lp = path_loss_nlos(distance(s.bs_position, s.users[0]), s.config.lambda()).gain_linear;
  EXPECT_NEAR(v(0, 0), std::sqrt(lp) * 0.5, 1e-15 * std::sqrt(lp));
}

TEST(BuildV, FarUserRowVanishes) {
  Scenario s = two_by_two(2e6);
  s.config.cell_half_side = 1e8;
  s.config.cutoff_delay = 1.0;
  s.users[1] = {5e7, 0.0, 1.5};
  const VMatrix v = build_v_matrix(s);
  const double lp = path_loss_nlos(distance(s.bs_position, s.users[1]), s.config.lambda()).gain_linear;
  EXPECT_LT(v.row(1).norm() / std::sqrt(lp), 1e-7);
}

TEST(BuildV, MatchesFactorComposition) {
  const Scenario s = two_by_two(2e6);
  const VMatrix v = build_v_matrix(s);
  const double lambda = 299792458.0 / 2e9;
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t j = 0; j < 2; ++j) {
      const Vec3 u = s.users[k];
      const Vec3 c = s.clusters[j].position;
      const Vec2 vr = s.clusters[j].vr_center;
      const double d_bs_ms = std::sqrt(u.x * u.x + u.y * u.y + std::pow(u.z - 5.0, 2));
      const double d_bs_c = std::sqrt(c.x * c.x + c.y * c.y + std::pow(c.z - 5.0, 2));
      const double d_c_ms = std::sqrt(std::pow(c.x - u.x, 2) + std::pow(c.y - u.y, 2) + std::pow(c.z - u.z, 2));
      const double lp = path_loss_nlos(d_bs_ms, lambda).gain_linear;
      const double avr = vr_gain(std::hypot(u.x - vr.x, u.y - vr.y), 50.0, 20.0, lambda);
      const double ac = cluster_attenuation((d_bs_c + d_c_ms) / 299792458.0, d_bs_ms / 299792458.0, 10e-6, 2e6);
      const double expect = std::sqrt(lp) * avr * std::sqrt(ac);
      EXPECT_NEAR(v(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)), expect, 1e-12 * expect);
    }
  }
  EXPECT_TRUE((v.array() >= 0.0).all());
}

TEST(CorrelationMetric, Examples) {
  const RVector a = (RVector(2) << 1.0, 1.0).finished();
  const RVector b = (RVector(2) << 1.0, 0.0).finished();
  const RVector c = (RVector(2) << 0.0, 4.0).finished();
  EXPECT_NEAR(correlation_metric(a, a), 1.0, 1e-15);
  EXPECT_EQ(correlation_metric(b, c), 0.0);
  EXPECT_NEAR(correlation_metric(a, b), 0.70710678118654752, 1e-15);
  EXPECT_THROW(correlation_metric(a, RVector::Zero(2)), DomainError);
}

TEST(CorrelationMetric, SymmetricBoundedScaleInvariant) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> scale(1e-9, 1e9);
  for (int t = 0; t < 500; ++t) {
    RVector x(5), y(5);
    for (int i = 0; i < 5; ++i) {
      x(i) = u(rng);
      y(i) = u(rng);
    }
    const double c = correlation_metric(x, y);
    EXPECT_EQ(c, correlation_metric(y, x));
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
    EXPECT_NEAR(correlation_metric((scale(rng) * x).eval(), y), c, 1e-12);
  }
}

TEST(GusSelect, OrthogonalRows) {
  const ScheduleResult r = gus_select(rows({{2, 0}, {0, 1}}), 2);
  EXPECT_EQ(r.selected, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.per_step_scores[0], 2.0);
  EXPECT_EQ(r.per_step_scores[1], 0.0);
}

TEST(GusSelect, HandEnumeratedInstance) {
  const ScheduleResult r = gus_select(rows({{1, 1}, {1, 0}, {3, 0}}), 2);
  EXPECT_EQ(r.selected, (std::vector<std::size_t>{2, 0}));
  EXPECT_NEAR(r.per_step_scores[1], 0.70710678118654752, 1e-15);
}

TEST(GusSelect, SingleUserIsMaxNorm) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VMatrix v(12, 3);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng);
  Eigen::Index best;
  v.rowwise().norm().maxCoeff(&best);
  EXPECT_EQ(gus_select(v, 1).selected, std::vector<std::size_t>{static_cast<std::size_t>(best)});
}

TEST(GusSelect, TiesGoToLowestIndex) {
  EXPECT_EQ(gus_select(rows({{1, 0}, {0, 1}, {1, 0}, {0, 1}}), 2).selected, (std::vector<std::size_t>{0, 1}));
}

TEST(GusSelect, VariantsDiffer) {
  // After {0, 1}, user 2 is orthogonal to the last pick but parallel to user 0.
  const VMatrix v = rows({{3, 0, 0}, {0, 1, 0}, {1, 0, 0}, {0, 0, 1}});
  EXPECT_EQ(gus_select(v, 3, GusVariant::kLastSelected).selected, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(gus_select(v, 3, GusVariant::kSelectedSet).selected, (std::vector<std::size_t>{0, 1, 3}));
}

TEST(GusSelect, AvoidsSecondUserOfSharedCluster) {
  // Users 0 and 1 see only cluster 0; user 2 sees a distinct cluster.
  const ScheduleResult r = gus_select(rows({{0.9, 0, 0}, {0.5, 0, 0}, {0, 0.2, 0.01}}), 2);
  EXPECT_EQ(r.selected, (std::vector<std::size_t>{0, 2}));
}

TEST(GusSelect, ScalingInvariance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> s(0.1, 10.0);
  for (int t = 0; t < 200; ++t) {
    VMatrix v(10, 3);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng);
    const ScheduleResult base = gus_select(v, 4);
    EXPECT_EQ(gus_select((s(rng) * v).eval(), 4).selected, base.selected);

    // Per-row scaling keeps every correlation step; pin the first pick by
    // leaving its row unscaled and shrinking the others.
    VMatrix w = v;
    for (Eigen::Index k = 0; k < w.rows(); ++k) {
      if (static_cast<std::size_t>(k) != base.selected[0]) w.row(k) *= 0.05 * u(rng) + 1e-3;
    }
    EXPECT_EQ(gus_select(w, 4).selected, base.selected);

    std::set<std::size_t> uniq(base.selected.begin(), base.selected.end());
    EXPECT_EQ(uniq.size(), 4u);
  }
}

TEST(GusSelect, ZeroRowsExcludedOrInfeasible) {
  const ScheduleResult r = gus_select(rows({{0, 0}, {1, 0}, {0, 2}}), 2);
  EXPECT_EQ(r.selected, (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(r.excluded, std::vector<std::size_t>{0});
  EXPECT_THROW(gus_select(rows({{0, 0}, {1, 0}, {0, 0}}), 2), InfeasibleSelection);
  EXPECT_THROW(gus_select(rows({{1, 0}}), 2), DomainError);
}

TEST(GwcSelect, SingleUserIsMaxNormColumn) {
  std::mt19937_64 rng(4);
  const CMatrix h = gaussian(8, 10, rng);
  Eigen::Index best;
  h.colwise().norm().maxCoeff(&best);
  EXPECT_EQ(gwc_select(h, 1, PowerConfig{1.0, 1.0}).selected, std::vector<std::size_t>{static_cast<std::size_t>(best)});
}

TEST(GwcSelect, OrthogonalEqualNormColumnsTieBreak) {
  const CMatrix h = CMatrix::Identity(6, 6);
  EXPECT_EQ(gwc_select(h, 3, PowerConfig{3.0, 1.0}).selected, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(GwcSelect, ObjectiveNondecreasingAndNearExhaustive) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const CMatrix h = gaussian(4, 5, rng);
    const PowerConfig power{10.0, 1.0};
    const ScheduleResult r = gwc_select(h, 2, power);
    ASSERT_EQ(r.selected.size(), 2u);
    EXPECT_GE(r.per_step_scores[1], r.per_step_scores[0] - 1e-12);

    double best = 0.0;
    for (std::size_t a = 0; a < 5; ++a) {
      for (std::size_t b = a + 1; b < 5; ++b) {
        CMatrix sub(4, 2);
        sub.col(0) = h.col(static_cast<Eigen::Index>(a));
        sub.col(1) = h.col(static_cast<Eigen::Index>(b));
        best = std::max(best, sum_rate(sub, zf_weights(sub), power));
      }
    }
    EXPECT_GE(r.per_step_scores[1], 0.9 * best);
  }
}

TEST(GwcSelect, RankCollapseIsInfeasible) {
  CMatrix h(4, 3);
  h.col(0) = CVector::Ones(4);
  h.col(1) = 2.0 * CVector::Ones(4);
  h.col(2) = cplx(0.0, 1.0) * CVector::Ones(4);
  EXPECT_THROW(gwc_select(h, 2, PowerConfig{1.0, 1.0}), InfeasibleSelection);
}

TEST(RandomSelect, Basics) {
  ScheduleResult all = random_select(7, 7, 11);
  std::sort(all.selected.begin(), all.selected.end());
  EXPECT_EQ(all.selected, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(random_select(40, 5, 9).selected, random_select(40, 5, 9).selected);
  EXPECT_THROW(random_select(3, 4, 1), DomainError);
  const ScheduleResult r = random_select(40, 10, 123);
  EXPECT_EQ(std::set<std::size_t>(r.selected.begin(), r.selected.end()).size(), 10u);
}

TEST(RandomSelect, UniformFrequencies) {
  std::vector<int> hits(10, 0);
  const int draws = 10000;
  for (int s = 0; s < draws; ++s) ++hits[random_select(10, 1, static_cast<std::uint64_t>(s)).selected[0]];
  for (int h : hits) EXPECT_NEAR(h / static_cast<double>(draws), 0.1, 0.01);
}

TEST(EstimationLoad, Examples) {
  EXPECT_EQ(estimation_load(200, 10), 4000u);
  EXPECT_EQ(static_cast<double>(estimation_load(64, 10)) / static_cast<double>(estimation_load(64, 50)), 0.2);
  EXPECT_THROW(estimation_load(0, 10), DomainError);
}
