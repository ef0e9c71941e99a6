#include "sugar/prox.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sugar;

namespace {

Vec fd_dir(const std::function<Vec(const Vec&)>& f, const Vec& x, const Vec& d, double h = 1e-6) {
  return (f(x + h * d) - f(x - h * d)) / (2 * h);
}

double rel(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(1e-12, b.norm()); }

// Checks the three derivative paths of an atom against central differences.
void check_atom(const ProxAtom& atom, const Vec& t, const Vec& y, const Vec& theta, double step, double tol) {
  Rng rng(17);
  const auto lin = atom.linearize(t, y, theta, step, true);
  EXPECT_LT((lin.value - atom.eval(t, y, theta, step)).norm(), 1e-12);
  const Vec dt = rng.normal_vec(t.size());
  EXPECT_LT(rel(lin.input(dt), fd_dir([&](const Vec& s) { return atom.eval(s, y, theta, step); }, t, dt)), tol);
  if (y.size()) {
    const Vec dy = rng.normal_vec(y.size());
    const Vec fd = fd_dir([&](const Vec& s) { return atom.eval(t, s, theta, step); }, y, dy);
    EXPECT_LT((lin.obs(dy) - fd).norm(), tol * std::max(1.0, fd.norm()));
  }
  for (Index k = 0; k < theta.size(); ++k) {
    const Vec fd =
        fd_dir([&](const Vec& th) { return atom.eval(t, y, th, step); }, theta, Vec::Unit(theta.size(), k));
    EXPECT_LT((lin.theta.col(k) - fd).norm(), tol * std::max(1.0, fd.norm())) << "theta " << k;
  }
}

}  // namespace

TEST(ParamVector, RejectsNonPositiveEntries) {
  EXPECT_NO_THROW(ParamVector(Vec::Constant(3, 0.1)));
  EXPECT_THROW(ParamVector(Vec::Zero(2)), ConfigError);
  Vec v(2);
  v << 1, -1;
  EXPECT_THROW(ParamVector{v}, ConfigError);
  v << 1, std::nan("");
  EXPECT_THROW(ParamVector{v}, ConfigError);
}

TEST(SoftThreshold, ValuesAndJacobians) {
  Vec t(5);
  t << -3, -1, 0.5, 1, 2.5;
  const Vec s = soft_threshold(t, 1.0);
  Vec expect(5);
  expect << -2, 0, 0, 0, 1.5;
  EXPECT_EQ(s, expect);
  const auto j = soft_threshold_jacs(t, 1.0);
  Vec di(5), dr(5);
  di << 1, 0, 0, 0, 1;  // |t| = ρ counts as inactive
  dr << 1, 0, 0, 0, -1;
  EXPECT_EQ(j.diag_input, di);
  EXPECT_EQ(j.jac_rho, dr);
}

TEST(SoftThreshold, IsNonexpansive) {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const Vec a = 2 * rng.normal_vec(20), b = 2 * rng.normal_vec(20);
    EXPECT_LE((soft_threshold(a, 0.7) - soft_threshold(b, 0.7)).norm(), (a - b).norm() + 1e-12);
  }
}

TEST(BlockSoftThreshold, ShrinksNormsAndMatchesFiniteDifferences) {
  Rng rng(3);
  const Index nb = 6;
  const Vec t = 2 * rng.normal_vec(2 * nb);
  const double rho = 0.8;
  const Vec s = block_soft_threshold(t, nb, rho);
  for (Index i = 0; i < nb; ++i) {
    const double nt = std::hypot(t[i], t[i + nb]), ns = std::hypot(s[i], s[i + nb]);
    EXPECT_NEAR(ns, std::max(0.0, nt - rho), 1e-12);
  }
  const Vec d = rng.normal_vec(2 * nb);
  EXPECT_LT(rel(block_soft_threshold_jac_input(t, nb, rho, d),
                fd_dir([&](const Vec& x) { return block_soft_threshold(x, nb, rho); }, t, d)),
            1e-6);
  const Vec fr = (block_soft_threshold(t, nb, rho + 1e-6) - block_soft_threshold(t, nb, rho - 1e-6)) / 2e-6;
  EXPECT_LT(rel(block_soft_threshold_jac_rho(t, nb, rho), fr), 1e-6);
  EXPECT_EQ(block_soft_threshold(Vec::Zero(4), 2, 1.0), Vec::Zero(4));
}

TEST(MultiscaleSoftThreshold, BandsAndThetaJacobian) {
  Rng rng(4);
  const Vec t = 2 * rng.normal_vec(12);
  Vec rho(3);
  rho << 0.3, 0.9, 1.4;
  const Vec s = multiscale_soft_threshold(t, rho);
  for (int b = 0; b < 3; ++b) EXPECT_EQ(s.segment(4 * b, 4), soft_threshold(t.segment(4 * b, 4), rho[b]));
  const Mat J = multiscale_soft_threshold_jac_theta(t, rho);
  for (int b = 0; b < 3; ++b) {
    Vec rp = rho, rm = rho;
    rp[b] += 1e-6;
    rm[b] -= 1e-6;
    EXPECT_LT(rel(J.col(b), (multiscale_soft_threshold(t, rp) - multiscale_soft_threshold(t, rm)) / 2e-6), 1e-6);
  }
  EXPECT_THROW(multiscale_soft_threshold(Vec::Zero(10), rho), ConfigError);
}

TEST(NuclearProx, ShrinksSingularValues) {
  Rng rng(5);
  const Mat x = Mat::Random(7, 4) * 3;
  const Vec s = Eigen::JacobiSVD<Mat>(x).singularValues();
  const Mat p = nuclear_prox(x, 1.5);
  const Vec sp = Eigen::JacobiSVD<Mat>(p).singularValues();
  for (Index i = 0; i < s.size(); ++i) EXPECT_NEAR(sp[i], std::max(0.0, s[i] - 1.5), 1e-12);
}

TEST(NuclearProx, JacobiansMatchFiniteDifferencesBothOrientations) {
  for (auto [r, c] : {std::pair<Index, Index>{7, 4}, {4, 7}, {5, 5}}) {
    Mat x = Mat::Random(r, c) * 2;
    const double rho = 0.6;
    const Mat d = Mat::Random(r, c);
    const Mat fd = (nuclear_prox(x + 1e-6 * d, rho) - nuclear_prox(x - 1e-6 * d, rho)) / 2e-6;
    EXPECT_LT((nuclear_prox_jac_input(x, rho, d) - fd).norm(), 1e-5 * fd.norm()) << r << "x" << c;
    const Mat fr = (nuclear_prox(x, rho + 1e-6) - nuclear_prox(x, rho - 1e-6)) / 2e-6;
    EXPECT_LT((nuclear_prox_jac_theta(x, rho) - fr).norm(), 1e-5 * fr.norm()) << r << "x" << c;
  }
}

TEST(NuclearProx, RepeatedSingularValuesUseTheDerivativeLimit) {
  // Orthogonal matrix scaled by 2: all singular values equal.
  Rng rng(6);
  Eigen::HouseholderQR<Mat> qr(Mat::Random(5, 5));
  const Mat x = 2 * Mat(qr.householderQ());
  const Mat d = Mat::Random(5, 5);
  const Mat fd = (nuclear_prox(x + 1e-6 * d, 0.5) - nuclear_prox(x - 1e-6 * d, 0.5)) / 2e-6;
  EXPECT_LT((nuclear_prox_jac_input(x, 0.5, d) - fd).norm(), 1e-5 * fd.norm());
}

TEST(NuclearProx, RankReportsSurvivingSingularValues) {
  Mat x = Mat::Zero(4, 3);
  x(0, 0) = 5;
  x(1, 1) = 2;
  x(2, 2) = 0.5;
  EXPECT_EQ(NuclearProx(x, 1.0).rank(), 2);
  EXPECT_EQ(NuclearProx(x, 10.0).rank(), 0);
}

TEST(QuadraticDataProx, SolvesItsOptimalityCondition) {
  Rng rng(7);
  const Mat a = Mat::Random(5, 8);
  const auto phi = make_dense(a);
  const Vec x = rng.normal_vec(8), y = rng.normal_vec(5);
  const double xi = 0.7;
  const Vec p = quadratic_data_prox(x, y, xi, phi);
  // p - x + ξΦ*(Φp - y) = 0
  EXPECT_LT((p - x + xi * a.transpose() * (a * p - y)).norm(), 1e-12);
}

TEST(QuadraticDataProx, JacobiansMatchFiniteDifferences) {
  const auto gram = std::make_shared<GramSolver>(make_dense(Mat::Random(5, 8)));
  check_atom(*make_quadratic_data_atom(gram), Vec::Random(8), Vec::Random(5), Vec::Constant(1, 1.0), 0.7, 1e-7);
}

TEST(TvProjector, IsAnOrthogonalProjectionOntoGradientGraph) {
  const Index n1 = 6, n2 = 5, N = n1 * n2;
  TvProjector P(n1, n2);
  Rng rng(8);
  const Vec z = rng.normal_vec(3 * N);
  const Vec p = P.project(z);
  EXPECT_LT((P.gradient().apply(p.head(N)) - p.tail(2 * N)).norm(), 1e-10);
  EXPECT_LT((P.project(p) - p).norm(), 1e-10);
  // z - Pz is orthogonal to every element of the set.
  const Vec f = rng.normal_vec(N);
  Vec w(3 * N);
  w << f, P.gradient().apply(f);
  EXPECT_NEAR((z - p).dot(w), 0.0, 1e-9);
}

TEST(Atoms, DerivativesMatchFiniteDifferences) {
  Rng rng(9);
  Vec theta(3);
  theta << 0.4, 0.7, 1.1;
  check_atom(*make_l1_atom(10, 1, 2, 8), 2 * rng.normal_vec(10), Vec(), theta, 0.9, 1e-6);
  check_atom(*make_block_l1_atom(14, 2, 2, 6, 2), 2 * rng.normal_vec(14), Vec(), theta, 0.9, 1e-6);
  check_atom(*make_multiscale_l1_atom(4, {0, 0, 1, 2}), 2 * rng.normal_vec(16), Vec(), theta, 0.9, 1e-6);
  check_atom(*make_nuclear_atom(5, 3, 0), 2 * rng.normal_vec(15), Vec(), theta, 0.9, 1e-5);
  check_atom(*make_tv_constraint_atom(4, 4), rng.normal_vec(48), Vec(), theta, 0.9, 1e-6);
  check_atom(*make_conjugate_atom(make_multiscale_l1_atom(4, {0, 1, 2, 2})), 2 * rng.normal_vec(16), Vec(),
             theta, 0.9, 1e-6);
  check_atom(*make_zero_atom(5), rng.normal_vec(5), Vec(), theta, 0.9, 1e-9);
}

TEST(Atoms, ConjugateOfL1IsTheBoxProjection) {
  Rng rng(10);
  const auto c = make_conjugate_atom(make_l1_atom(20, 0));
  const Vec u = 3 * rng.normal_vec(20);
  const Vec theta = Vec::Constant(1, 1.25);
  const Vec p = c->eval(u, Vec(), theta, 0.4);
  EXPECT_LT((p - u.cwiseMax(-1.25).cwiseMin(1.25)).norm(), 1e-12);
}

TEST(Atoms, MoreauIdentity) {
  Rng rng(11);
  const auto inner = make_nuclear_atom(4, 3, 0);
  const auto conj = make_conjugate_atom(inner);
  const Vec u = 2 * rng.normal_vec(12), theta = Vec::Constant(1, 0.8);
  const double tau = 0.6;
  const Vec lhs = conj->eval(u, Vec(), theta, tau) + tau * inner->eval(u / tau, Vec(), theta, 1 / tau);
  EXPECT_LT((lhs - u).norm(), 1e-12);
}

TEST(Atoms, ProxIsFirmlyNonexpansive) {
  Rng rng(12);
  const Vec theta = Vec::Constant(1, 0.5);
  for (const auto& atom : {make_l1_atom(9, 0), make_nuclear_atom(3, 3, 0), make_block_l1_atom(9, 0, 1, 4, 2)}) {
    for (int i = 0; i < 20; ++i) {
      const Vec a = rng.normal_vec(9), b = rng.normal_vec(9);
      const Vec pa = atom->eval(a, Vec(), theta, 1.0), pb = atom->eval(b, Vec(), theta, 1.0);
      EXPECT_LE((pa - pb).squaredNorm(), (pa - pb).dot(a - b) + 1e-12);
    }
  }
}
