#include "sugar/operators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace sugar;

namespace {

double adjoint_gap(const LinearMap& A, Rng& rng) {
  const Vec x = rng.normal_vec(A.in_dim()), y = rng.normal_vec(A.out_dim());
  const double lhs = A.apply(x).dot(y), rhs = x.dot(A.adjoint(y));
  return std::abs(lhs - rhs) / (std::abs(lhs) + 1e-300);
}

double power_norm(const LinearMap& A, int iters = 300) {
  Rng rng(5);
  Vec v = rng.normal_vec(A.in_dim());
  double n = 0;
  for (int i = 0; i < iters; ++i) {
    v = A.adjoint(A.apply(v));
    n = v.norm();
    v /= n;
  }
  return std::sqrt(n);
}

std::vector<std::pair<std::string, MapPtr>> zoo() {
  Rng rng(3);
  Mat d = Mat::Random(7, 5);
  std::vector<std::pair<std::string, MapPtr>> maps;
  maps.emplace_back("identity", make_identity(6));
  maps.emplace_back("dense", make_dense(d));
  maps.emplace_back("mask", make_mask(10, {1, 4, 5, 9}));
  maps.emplace_back("blur", make_periodic_convolution(gaussian_kernel(8, 6, 1.0, 2), lowpass_frequency_mask(8, 6, 0.3)));
  maps.emplace_back("random_phase", make_periodic_convolution(8, 8, random_phase_spectrum(8, 8, rng)));
  maps.emplace_back("gradient", make_discrete_gradient(5, 7));
  maps.emplace_back("wavelet", make_undecimated_wavelet(16, 8, 2));
  maps.emplace_back("composed", compose(make_mask(64, {1, 2, 3, 30, 31, 64}), make_periodic_convolution(8, 8, random_phase_spectrum(8, 8, rng))));
  return maps;
}

}  // namespace

TEST(Operators, AdjointIdentityHoldsForEveryMap) {
  Rng rng(1);
  for (const auto& [name, A] : zoo())
    for (int trial = 0; trial < 5; ++trial) EXPECT_LT(adjoint_gap(*A, rng), 1e-12) << name;
}

TEST(Operators, NormBoundIsAnUpperBoundAndTightForSpectralMaps) {
  for (const auto& [name, A] : zoo()) {
    const double pn = power_norm(*A);
    EXPECT_LE(pn, A->norm_bound() * (1 + 1e-9)) << name;
    if (name == "wavelet") EXPECT_GT(pn, 0.99 * A->norm_bound());
    if (name != "mask" && name != "composed" && name != "gradient" && name != "wavelet") EXPECT_NEAR(pn, A->norm_bound(), 1e-6 * pn) << name;
  }
}

TEST(Operators, MaskIndexHandling) {
  const auto one = make_mask(5, {1, 3});
  const auto zero = make_mask(5, {0, 2}, IndexBase::Zero);
  const Vec x = Vec::LinSpaced(5, 10, 14);
  EXPECT_EQ(one->apply(x), zero->apply(x));
  EXPECT_DOUBLE_EQ(one->apply(x)[1], 12);
  EXPECT_THROW(make_mask(5, {1, 1}), ConfigError);
  EXPECT_THROW(make_mask(5, {0}), ConfigError);
  EXPECT_THROW(make_mask(5, {6}), ConfigError);
  EXPECT_THROW(make_mask(5, {5}, IndexBase::Zero), ConfigError);
}

TEST(Operators, GradientOfConstantVanishesAndDivergenceIsMinusAdjoint) {
  const auto g = make_discrete_gradient(6, 4);
  EXPECT_LT(g->apply(Vec::Constant(24, 3.5)).norm(), 1e-14);
  Rng rng(2);
  const Vec field = rng.normal_vec(48);
  EXPECT_LT((divergence(*g, field) + g->adjoint(field)).norm(), 1e-14);
  EXPECT_THROW(make_discrete_gradient(1, 4), ConfigError);
}

TEST(Operators, GradientDirectionsFollowTheLayout) {
  // f(i, j) = j varies along the column index only: the horizontal half carries it.
  const Index n1 = 4, n2 = 5, N = n1 * n2;
  Vec f(N);
  for (Index j = 0; j < n2; ++j)
    for (Index i = 0; i < n1; ++i) f[i + n1 * j] = double(j);
  const Vec g = make_discrete_gradient(n1, n2)->apply(f);
  EXPECT_GT(g.head(N).norm(), 1);
  EXPECT_LT(g.tail(N).norm(), 1e-14);
}

TEST(Operators, DaubechiesFilters) {
  const auto h = daubechies4_lowpass(), g = daubechies4_highpass();
  ASSERT_EQ(h.size(), 4u);
  double sh = 0, sg = 0, orth = 0;
  for (int k = 0; k < 4; ++k) {
    sh += h[k];
    sg += g[k];
    orth += h[k] * g[k];
  }
  EXPECT_NEAR(sh, 1.0, 1e-15);
  EXPECT_NEAR(sg, 0.0, 1e-15);
  EXPECT_NEAR(orth, 0.0, 1e-15);
  EXPECT_NEAR(h[0], (1 + std::sqrt(3.0)) / 8, 1e-15);
}

TEST(Operators, WaveletRejectsScalesTooCoarseForTheImage) {
  EXPECT_NO_THROW(make_undecimated_wavelet(16, 16, 3));
  EXPECT_THROW(make_undecimated_wavelet(8, 16, 3), ConfigError);
  EXPECT_THROW(make_undecimated_wavelet(16, 16, 0), ConfigError);
}

TEST(Operators, WaveletKillsConstantsInDetailBands) {
  const auto W = make_undecimated_wavelet(16, 16, 2);
  EXPECT_EQ(W->out_dim(), 4 * 256);
  EXPECT_LT(W->apply(Vec::Constant(256, 7)).norm(), 1e-12);
}

TEST(Operators, GaussianKernelIsNormalizedAndSymmetric) {
  const Mat k = gaussian_kernel(9, 9, 1.0, 2);
  EXPECT_NEAR(k.sum(), 1.0, 1e-14);
  EXPECT_NEAR(k(1, 0), k(8, 0), 1e-15);  // periodic wrap of offset ±1
  EXPECT_DOUBLE_EQ(k(3, 0), 0.0);        // outside radius 2
}

TEST(Operators, LowpassMaskKeepsRequestedFraction) {
  const Mat m = lowpass_frequency_mask(32, 32, 0.2);
  EXPECT_NEAR(m.sum() / 1024.0, 0.2, 0.02);
  EXPECT_EQ(m(0, 0), 1.0);
  EXPECT_EQ(m(16, 16), 0.0);
}

TEST(Operators, RandomPhaseConvolutionIsAnIsometry) {
  Rng rng(9);
  const auto C = make_periodic_convolution(8, 6, random_phase_spectrum(8, 6, rng));
  const Vec x = rng.normal_vec(48);
  EXPECT_NEAR(C->apply(x).norm(), x.norm(), 1e-12);
  EXPECT_LT((C->adjoint(C->apply(x)) - x).norm(), 1e-12);
}

TEST(GramSolver, PseudoInverseSatisfiesMoorePenroseOnRankDeficientMap) {
  Rng rng(4);
  Mat a = Mat::Zero(6, 8);
  for (int r = 0; r < 3; ++r) a += rng.normal_vec(6) * rng.normal_vec(8).transpose();
  const auto phi = make_dense(a);
  GramSolver gs(phi);
  const Mat G = a * a.transpose();
  Mat pinv(6, 6);
  for (int c = 0; c < 6; ++c) pinv.col(c) = gs.pinv(Vec::Unit(6, c));
  EXPECT_LT((G * pinv * G - G).norm(), 1e-8 * G.norm());
  EXPECT_LT((pinv * G * pinv - pinv).norm(), 1e-8 * pinv.norm());
  EXPECT_EQ(gs.rank(), 3);
  const Vec x = rng.normal_vec(8);
  EXPECT_LT((gs.project(gs.project(x)) - gs.project(x)).norm(), 1e-9 * x.norm());
}

TEST(GramSolver, ResolventInvertsIdPlusXiGram) {
  const auto phi = make_periodic_convolution(gaussian_kernel(8, 8, 1.0, 2), lowpass_frequency_mask(8, 8, 0.5));
  GramSolver gs(phi);
  Rng rng(6);
  const Vec v = rng.normal_vec(64);
  const Vec r = gs.resolvent(0.7, v);
  EXPECT_LT((r + 0.7 * phi->apply(phi->adjoint(r)) - v).norm(), 1e-12);
}

TEST(GramSolver, ConjugateGradientPathMatchesDense) {
  Rng rng(8);
  const Mat a = Mat::Random(20, 30);
  GramSolver dense(make_dense(a)), cg(make_dense(a), 0);
  const Vec v = rng.normal_vec(20);
  EXPECT_LT((dense.resolvent(0.3, v) - cg.resolvent(0.3, v)).norm(), 1e-8);
}

TEST(RiskWeight, ModesAndTraces) {
  const auto mask = make_mask(10, {1, 2, 7});
  EXPECT_DOUBLE_EQ(make_risk_weight(RiskMode::Prediction, mask).trace_AtA(), 3.0);
  const auto proj = make_risk_weight(RiskMode::Projection, mask);
  EXPECT_NEAR(proj.trace_AtA(), 3.0, 1e-12);
  // On a mask (ΦΦ* = Id) the projection weight is idempotent.
  Rng rng(1);
  const Vec v = rng.normal_vec(3);
  EXPECT_LT((proj.apply_AtA(proj.apply_AtA(v)) - proj.apply_AtA(v)).norm(), 1e-12);
  EXPECT_THROW(make_risk_weight(RiskMode::Estimation, mask), ConfigError);
  EXPECT_NO_THROW(make_risk_weight(RiskMode::Estimation, make_identity(4)));
  EXPECT_EQ(parse_risk_mode("projection"), RiskMode::Projection);
  EXPECT_THROW(parse_risk_mode("bogus"), ConfigError);
}

TEST(RiskWeight, ProjectionTraceIsSumOfInverseEigenvalues) {
  const auto phi = make_periodic_convolution(gaussian_kernel(8, 8, 1.0, 2), lowpass_frequency_mask(8, 8, 0.4));
  const auto w = make_risk_weight(RiskMode::Projection, phi);
  double direct = 0;
  for (Index i = 0; i < 64; ++i) direct += w.apply_AtA(Vec::Unit(64, i))[i];
  EXPECT_NEAR(w.trace_AtA(), direct, 1e-9 * direct);
}

TEST(RiskWeight, HutchinsonTraceIsCloseToExact) {
  Rng rng(11);
  const Mat a = Mat::Random(30, 30);
  const Mat M = a * a.transpose();
  const double est = hutchinson_trace([&](const Vec& v) { return Vec(M * v); }, 30, 4000, rng);
  EXPECT_NEAR(est, M.trace(), 0.05 * M.trace());
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a(42, 1), b(42, 1), c(42, 2);
  const Vec va = a.normal_vec(5), vb = b.normal_vec(5), vc = c.normal_vec(5);
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  Rng d(7);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(d.below(13), 13);
  EXPECT_STREQ(Rng::name(), "splitmix64-counter");
}
