#include "gus/rx_rate.hpp"

#include <gtest/gtest.h>
#include <unsupported/Eigen/KroneckerProduct>

#include <random>

using namespace gus;

namespace {

CMatrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double var = 1.0) {
  std::normal_distribution<double> n(0.0, std::sqrt(var / 2.0));
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

CMatrix random_covariance(Eigen::Index n, std::mt19937_64& rng) {
  const CMatrix a = gaussian(n, n, rng);
  return a * a.adjoint() + 0.1 * CMatrix::Identity(n, n);
}

}  // namespace

TEST(NoisePower, Examples) {
  EXPECT_NEAR(noise_power(20e6, 290.0, 9.0), 6.362410294494550e-13, 1e-24);
  EXPECT_NEAR(watts_to_dbm(noise_power(20e6, 290.0, 9.0)), -91.96, 0.005);
  EXPECT_DOUBLE_EQ(noise_power(20e6, 290.0, 0.0), 20e6 * kBoltzmann * 290.0);
  EXPECT_DOUBLE_EQ(noise_power(40e6, 290.0, 9.0), 2.0 * noise_power(20e6, 290.0, 9.0));
}

TEST(ChannelCovariance, SingleSampleIsOuterProduct) {
  std::mt19937_64 rng(1);
  const CVector h = gaussian(5, 1, rng);
  const std::vector<CVector> one{h};
  const CMatrix r = channel_covariance(one);
  EXPECT_LT((r - h * h.adjoint()).norm(), 1e-14);
}

TEST(ChannelCovariance, HermitianAndConvergesForWhiteSamples) {
  std::mt19937_64 rng(2);
  std::vector<CVector> samples;
  for (int i = 0; i < 10000; ++i) samples.push_back(gaussian(8, 1, rng));
  const CMatrix r = channel_covariance(samples);
  EXPECT_EQ(r, r.adjoint().eval());
  for (Eigen::Index i = 0; i < 8; ++i) EXPECT_NEAR(r(i, i).real(), 1.0, 0.05);
  EXPECT_THROW(channel_covariance(std::vector<CVector>{}), DomainError);
  samples.push_back(CVector::Zero(3));
  EXPECT_THROW(channel_covariance(samples), DomainError);
}

TEST(MmseEstimate, ScalarCase) {
  PilotConfig p;
  p.pilots = CMatrix::Ones(1, 1);
  p.noise_variance = 1.0;
  CMatrix y(1, 1);
  y(0, 0) = {0.8, -1.4};
  const CVector h = mmse_estimate(y, p, CMatrix::Ones(1, 1));
  EXPECT_EQ(h(0), cplx(0.4, -0.7));
}

TEST(MmseEstimate, MatchesInformationFormSolve) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index m = 2, k = 2, tau = 2;
    PilotConfig p;
    p.pilots = gaussian(k, tau, rng);
    p.noise_variance = 0.5;
    const CMatrix r = random_covariance(m * k, rng);
    const CMatrix y = gaussian(m, tau, rng);

    // (R^-1 + A^H A / s2)^-1 A^H y / s2 with A = Phi^T kron I.
    const CMatrix a = Eigen::kroneckerProduct(p.pilots.transpose(), CMatrix::Identity(m, m)).eval();
    const CMatrix info = r.inverse() + a.adjoint() * a / p.noise_variance;
    const CVector expect = info.partialPivLu().solve(a.adjoint() * y.reshaped() / p.noise_variance);

    const CVector got = mmse_estimate(y, p, r);
    EXPECT_LT((got - expect).norm(), 1e-8 * expect.norm()) << "trial " << trial;
  }
}

TEST(MmseEstimate, NoiselessLimitInvertsPilotEquation) {
  std::mt19937_64 rng(4);
  const Eigen::Index m = 3, k = 2;
  PilotConfig p;
  p.pilots = gaussian(k, k, rng);
  p.noise_variance = 1e-12;
  const CMatrix h = gaussian(m, k, rng);
  const CMatrix y = h * p.pilots;
  const CVector est = mmse_estimate(y, p, random_covariance(m * k, rng));
  EXPECT_LT((est - h.reshaped()).norm(), 1e-6 * h.norm());
}

TEST(MmseEstimate, SingularWithoutNoiseIsReported) {
  std::mt19937_64 rng(5);
  PilotConfig p;
  p.pilots = CMatrix::Identity(2, 2);
  p.noise_variance = 0.0;
  const CVector h = gaussian(4, 1, rng);
  const CMatrix r = h * h.adjoint();  // rank one
  EXPECT_THROW(mmse_estimate(gaussian(2, 2, rng), p, r), SingularityError);
}

TEST(MmseEstimate, DimensionChecks) {
  PilotConfig p;
  p.pilots = CMatrix::Identity(2, 2);
  EXPECT_THROW(mmse_estimate(CMatrix::Ones(2, 3), p, CMatrix::Identity(4, 4)), DomainError);
  EXPECT_THROW(mmse_estimate(CMatrix::Ones(2, 2), p, CMatrix::Identity(3, 3)), DomainError);
}

TEST(MmseEstimate, OrthogonalityPrinciple) {
  std::mt19937_64 rng(6);
  const Eigen::Index m = 2, k = 2;
  const PilotConfig p = orthogonal_pilots(2, 1.0, 0.7);
  const CMatrix r = random_covariance(m * k, rng);
  const CMatrix chol = Eigen::LLT<CMatrix>(r).matrixL();

  const int n = 10000;
  CMatrix cross = CMatrix::Zero(m * k, m * k);
  double err_pow = 0.0, est_pow = 0.0;
  for (int i = 0; i < n; ++i) {
    const CVector h = chol * gaussian(m * k, 1, rng);
    const CMatrix y = h.reshaped(m, k) * p.pilots + gaussian(m, k, rng, p.noise_variance);
    const CVector est = mmse_estimate(y, p, r);
    const CVector e = h - est;
    cross += e * est.adjoint();
    err_pow += e.squaredNorm();
    est_pow += est.squaredNorm();
  }
  cross /= n;
  EXPECT_LT(cross.norm() / std::sqrt(err_pow / n * est_pow / n), 0.02);
}

TEST(ZfWeights, IdentityChannel) {
  const ZfReceiver w = zf_weights(CMatrix::Identity(4, 4));
  EXPECT_LT((w.weights - CMatrix::Identity(4, 4)).norm(), 1e-15);
}

TEST(ZfWeights, OrthogonalColumnsGiveScaledConjugateRows) {
  const double c = 3.0;
  CMatrix h = CMatrix::Zero(6, 2);
  h(0, 0) = c;
  h(3, 1) = cplx(0.0, c);
  const ZfReceiver w = zf_weights(h);
  for (Eigen::Index k = 0; k < 2; ++k) {
    EXPECT_LT((w.weights.row(k) - h.col(k).adjoint() / (c * c)).norm(), 1e-15);
  }
  EXPECT_LT((w.weights * h - CMatrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(ZfWeights, RandomResidual) {
  std::mt19937_64 rng(7);
  const CMatrix h = gaussian(8, 3, rng);
  const ZfReceiver w = zf_weights(h);
  EXPECT_LT((w.weights * h - CMatrix::Identity(3, 3)).norm(), 1e-9);
}

TEST(ZfWeights, RankDeficientNamesCondition) {
  std::mt19937_64 rng(8);
  CMatrix h = gaussian(8, 3, rng);
  h.col(2) = 2.0 * h.col(0);
  try {
    zf_weights(h);
    FAIL() << "expected SingularityError";
  } catch (const SingularityError& e) {
    EXPECT_NE(std::string(e.what()).find("condition number"), std::string::npos);
    EXPECT_GT(e.condition(), 1e12);
  }
  EXPECT_THROW(zf_weights(gaussian(2, 3, rng)), DomainError);
}

TEST(SumRate, PaperLiteralPerfectZf) {
  std::mt19937_64 rng(9);
  const CMatrix h = gaussian(16, 4, rng);
  const PowerConfig power{8.0, 1.0};
  const double r = sum_rate(h, zf_weights(h), power, NoiseModel::kPaperLiteral);
  EXPECT_NEAR(r, 4.0 * std::log2(1.0 + 2.0), 1e-12);
}

TEST(SumRate, ZeroPowerAndUnitSinr) {
  std::mt19937_64 rng(10);
  const CMatrix h = gaussian(8, 3, rng);
  EXPECT_EQ(sum_rate(h, zf_weights(h), PowerConfig{0.0, 1.0}), 0.0);
  const CMatrix eye = CMatrix::Identity(5, 5);
  EXPECT_NEAR(sum_rate(eye, zf_weights(eye), PowerConfig{5.0, 1.0}, NoiseModel::kPhysical), 5.0, 1e-12);
}

TEST(SumRate, NondecreasingInPower) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const CMatrix h = gaussian(12, 4, rng);
    const CMatrix h_est = h + gaussian(12, 4, rng, 0.01);  // imperfect CSI leaves residual interference
    const ZfReceiver w = zf_weights(h_est);
    for (NoiseModel mode : {NoiseModel::kPhysical, NoiseModel::kPaperLiteral}) {
      double prev = -1.0;
      for (double p = 0.01; p < 1e4; p *= 3.0) {
        const double r = sum_rate(h, w, PowerConfig{p, 1.0}, mode);
        EXPECT_GE(r, prev);
        prev = r;
      }
    }
  }
}

TEST(ErgodicCapacity, Examples) {
  std::mt19937_64 rng(12);
  const std::vector<CMatrix> hs{gaussian(6, 3, rng)};
  EXPECT_EQ(ergodic_capacity(hs, PowerConfig{0.0, 1.0}), 0.0);

  // H H^H = P_n I with K_s = M.
  const double pn = 0.25;
  const CMatrix q = gaussian(4, 4, rng).householderQr().householderQ();
  const std::vector<CMatrix> unitary{std::sqrt(pn) * q};
  EXPECT_NEAR(ergodic_capacity(unitary, PowerConfig{8.0, pn}), 4.0 * std::log2(1.0 + 2.0), 1e-12);

  EXPECT_THROW(ergodic_capacity(std::vector<CMatrix>{}, PowerConfig{}), DomainError);
}

TEST(ErgodicCapacity, DominatesZfSumRate) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 100; ++t) {
    const CMatrix h = gaussian(8, 4, rng);
    const PowerConfig power{std::pow(10.0, (t % 7) - 2.0), 1.0};
    const std::vector<CMatrix> one{h};
    EXPECT_GE(ergodic_capacity(one, power), sum_rate(h, zf_weights(h), power, NoiseModel::kPhysical) - 1e-12);
  }
}
