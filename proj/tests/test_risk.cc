#include "sugar/risk.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sugar;

namespace {

RiskWeight identity_weight(Index P) { return make_risk_weight(RiskMode::Prediction, make_identity(P)); }

}  // namespace

TEST(Risk, LinearShrinkageSureByHand) {
  Rng rng(1);
  const Index P = 40;
  const double sigma = 0.8, c = 0.6;
  const Vec y = rng.normal_vec(P) * 2;
  const auto w = identity_weight(P);
  const auto r = sure_closed_form(c * y, c * P, y, w, sigma);
  const double expect = (1 - c) * (1 - c) * y.squaredNorm() - sigma * sigma * P + 2 * sigma * sigma * c * P;
  EXPECT_NEAR(r.sure, expect, 1e-10 * std::abs(expect));
  EXPECT_EQ(r.variant, RiskVariant::ClosedForm);
}

TEST(Risk, IdentityEstimatorHasSurePSigmaSquared) {
  const Index P = 10;
  const Vec y = Vec::LinSpaced(P, -1, 1);
  EXPECT_NEAR(sure_closed_form(y, double(P), y, identity_weight(P), 2.0).sure, 4.0 * P, 1e-12);
}

TEST(Risk, FiniteDifferenceDofIsExactForLinearMaps) {
  Rng rng(2);
  const Index P = 12;
  const Mat M = Mat::Random(P, P);
  const auto w = identity_weight(P);
  const Vec y = rng.normal_vec(P);
  const MuFn mu = [&](const Vec& v) { return Vec(M * v); };
  for (double eps : {1e-3, 1.0, 10.0}) EXPECT_NEAR(dof_fd(mu, y, eps, w), M.trace(), 1e-9);
  const Vec d = rng.normal_vec(P);
  EXPECT_NEAR(dof_fdmc(mu, y, 0.5, d, w), d.dot(M * d), 1e-9);
  EXPECT_NEAR(dof_mc(M * d, d, w), d.dot(M * d), 1e-12);
}

TEST(Risk, WeightedDofUsesAtA) {
  Rng rng(3);
  const Mat a = Mat::Random(4, 6);
  const auto w = make_risk_weight(RiskMode::Projection, make_dense(a));
  const Mat M = Mat::Random(4, 4);
  const MuFn mu = [&](const Vec& v) { return Vec(M * v); };
  Mat AtA(4, 4);
  for (int c = 0; c < 4; ++c) AtA.col(c) = w.apply_AtA(Vec::Unit(4, c));
  EXPECT_NEAR(dof_fd(mu, rng.normal_vec(4), 0.1, w), (AtA * M).trace(), 1e-8);
}

TEST(Risk, FdRefusesHugeProblems) {
  const Index P = kMaxFdDim + 1;
  const auto w = identity_weight(P);
  EXPECT_THROW(dof_fd([](const Vec& v) { return v; }, Vec::Zero(P), 0.1, w), ConfigError);
}

TEST(Risk, SugarShapeChecks) {
  const auto w = identity_weight(3);
  const Mat j(3, 2), jbad(2, 2);
  const Vec v = Vec::Zero(3);
  EXPECT_THROW(sugar_fdmc(j, jbad, v, v, 0.1, v, w, 1.0), ConfigError);
  EXPECT_THROW(sugar_fdmc(jbad, jbad, v, v, 0.1, v, w, 1.0), ConfigError);
}

TEST(Risk, SugarMatchesDerivativeOfSureForSmoothFamily) {
  // μ(y, θ) = y / (1 + θ) is linear in y; its FDMC SURE is smooth in θ.
  Rng rng(4);
  const Index P = 30;
  const double sigma = 1.2, eps = 0.3;
  const Vec y = rng.normal_vec(P) * 3, d = rng.normal_vec(P);
  const auto w = identity_weight(P);
  auto sure = [&](double th) {
    const MuFn mu = [&](const Vec& v) { return Vec(v / (1 + th)); };
    return sure_from_dof(mu(y), y, w, sigma, dof_fdmc(mu, y, eps, d, w));
  };
  const double th = 0.7;
  const Mat jy = -y / std::pow(1 + th, 2);
  const Mat jp = -(y + eps * d) / std::pow(1 + th, 2);
  const Vec g = sugar_fdmc(jy, jp, y / (1 + th), y, eps, d, w, sigma);
  EXPECT_NEAR(g[0], (sure(th + 1e-6) - sure(th - 1e-6)) / 2e-6, 1e-5 * std::abs(g[0]));
}

TEST(Risk, EpsilonRule) {
  EXPECT_DOUBLE_EQ(epsilon_rule(1.0, 1.0), 2.0);
  EXPECT_NEAR(epsilon_rule(1.0, 1024.0), 0.25, 1e-15);
  EXPECT_NEAR(epsilon_rule(3.0, 1024.0, 2.0, 0.0), 6.0, 1e-15);
  EXPECT_THROW(epsilon_rule(0.0, 10.0), ConfigError);
}

TEST(Risk, VariantNamesRoundTrip) {
  for (auto v : {RiskVariant::ClosedForm, RiskVariant::MC, RiskVariant::FD, RiskVariant::FDMC})
    EXPECT_EQ(parse_risk_variant(to_string(v)), v);
  EXPECT_THROW(parse_risk_variant("sure"), ConfigError);
}

TEST(Risk, NoiseModelValidatesSigma) {
  EXPECT_THROW(NoiseModel(0.0), ConfigError);
  EXPECT_THROW(NoiseModel(-1.0), ConfigError);
  EXPECT_DOUBLE_EQ(NoiseModel(2.5).sigma, 2.5);
}
