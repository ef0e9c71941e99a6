#pragma once

#include "sugar/core.hpp"
#include "sugar/operators.hpp"

#include <functional>
#include <string>

namespace sugar {

enum class RiskVariant { ClosedForm, MC, FD, FDMC };

RiskVariant parse_risk_variant(const std::string& s);
std::string to_string(RiskVariant v);

struct NoiseModel {
  explicit NoiseModel(double sigma);
  double sigma;
};

struct RiskReport {
  RiskVariant variant = RiskVariant::FDMC;
  double sure = 0;
  double dof = 0;
  Vec sugar;         // empty unless the variant provides a gradient
  double epsilon = 0;  // 0 for ClosedForm and MC
  Vec probe;         // present for MC and FDMC
  int solver_passes = 0;
};

using MuFn = std::function<Vec(const Vec& y)>;

// ‖A(μ - y)‖² - σ² tr(A*A) + 2σ² dof
double sure_from_dof(const Vec& mu, const Vec& y, const RiskWeight& w, double sigma, double dof);
RiskReport sure_closed_form(const Vec& mu, double trace_jac, const Vec& y, const RiskWeight& w, double sigma);

double dof_mc(const Vec& d_mu, const Vec& delta, const RiskWeight& w);

constexpr Index kMaxFdDim = 10000;
double dof_fd(const MuFn& mu_at, const Vec& y, double eps, const RiskWeight& w);
double dof_fdmc(const MuFn& mu_at, const Vec& y, double eps, const Vec& delta, const RiskWeight& w);
double dof_fdmc(const Vec& mu, const Vec& mu_pert, double eps, const Vec& delta, const RiskWeight& w);

// 2 J(y)ᵀ A*A (μ - y) + (2σ²/ε) (J(y+εδ) - J(y))ᵀ A*A δ
Vec sugar_fdmc(const Mat& j_y, const Mat& j_pert, const Vec& mu, const Vec& y, double eps, const Vec& delta,
               const RiskWeight& w, double sigma);

// Canonical-basis form: j_at(y + ε e_i) for every i.
Vec sugar_fd(const std::function<Mat(const Vec&)>& j_at, const Vec& mu, const Vec& y, double eps,
             const RiskWeight& w, double sigma);

double epsilon_rule(double sigma, double P, double C = 2.0, double alpha = 0.3);

}  // namespace sugar
