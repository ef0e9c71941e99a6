#pragma once

#include "sugar/core.hpp"

#include <functional>
#include <vector>

namespace sugar {

struct STSetting {
  Vec mu0;
  double sigma = 1;
  double lambda = 1;
  double epsilon = 0.5;
  void validate() const;  // σ, λ, ε > 0 and ε < 2λ
};

// φ[a, λ, ε]: twice the probability that a + σZ lands in one of the two ε-bands below ±λ.
double st_phi(double a, double lambda, double eps, double sigma);

double st_dofgrad_mean(const STSetting& s);
double st_dofgrad_var(const STSetting& s);
double st_dofgrad_true(const Vec& mu0, double sigma, double lambda);

// d/dλ of the canonical finite-difference DOF of ST at a given y.
double st_dofgrad_fd(const Vec& y, double lambda, double eps);
// SUGAR of ST denoising (A = Id, canonical-basis form).
double st_sugar_fd(const Vec& y, double lambda, double eps, double sigma);
// d/dλ E‖ST(Y, λ) - μ₀‖².
double st_risk_gradient_true(const Vec& mu0, double sigma, double lambda);

// (μ₀)_i = c·i^(-1/γ) with alternating signs, i = 1..P.
Vec compressible_mu0(Index P, double gamma, double c);

struct MseCell {
  Index P;
  double epsilon;
  double bias2;     // (mean - true)² / P²
  double variance;  // var / P²
  double mse;
};

std::vector<MseCell> st_mse_surface(const std::vector<Index>& Ps, const std::vector<double>& epsilons,
                                    double gamma, double c, double sigma, double lambda);
// Minimizing ε per P over the surface cells, in order of first appearance of P.
std::vector<std::pair<Index, double>> argmin_epsilon(const std::vector<MseCell>& cells);

struct ConsistencyRow {
  Index P;
  double epsilon;
  double mean_err;  // mean of (SUGAR - ∇Risk)/P
  double sd_err;
  double rms_err;
  int replicates;
};

using EpsilonRule = std::function<double(Index P)>;

std::vector<ConsistencyRow> st_sugar_consistency(const std::vector<Index>& Ps, const EpsilonRule& rule,
                                                 int replicates, double gamma, double c, double sigma,
                                                 double lambda, std::uint64_t seed);

double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace sugar
