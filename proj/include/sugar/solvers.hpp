#pragma once

#include "sugar/core.hpp"
#include "sugar/operators.hpp"
#include "sugar/prox.hpp"
#include "sugar/risk.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sugar {

// Smooth data term F(x, y, θ) with its gradient and the linearization of ∇₁F.
class SmoothTerm {
 public:
  virtual ~SmoothTerm() = default;
  virtual Index dim() const = 0;
  virtual double lipschitz() const = 0;
  virtual double value(const Vec& x, const Vec& y, const Vec& theta) const = 0;
  virtual Vec grad(const Vec& x, const Vec& y, const Vec& theta) const = 0;
  virtual Vec jac_x(const Vec& x, const Vec& y, const Vec& theta, const Vec& dx) const = 0;
  virtual Vec jac_y(const Vec& x, const Vec& y, const Vec& theta, const Vec& dy) const = 0;
  virtual Mat jac_theta(const Vec& x, const Vec& y, const Vec& theta) const;
};

using SmoothPtr = std::shared_ptr<const SmoothTerm>;

// F = ½‖Φ x[0:N) - y‖², the remaining coordinates of x are left free.
SmoothPtr make_quadratic_fidelity(MapPtr phi, Index dim = -1);
SmoothPtr make_zero_smooth(Index dim);

struct GfbConfig {
  int iters = 100;
  double nu = 0;  // 0 selects 1/L
};

struct CpConfig {
  int iters = 100;
  double tau = 0;  // 0 selects 0.99/(balance·‖K‖)
  double xi = 0;   // 0 selects 0.99·balance/‖K‖
  double balance = 1.0;  // primal/dual step ratio is balance²
  double zeta = 1.0;
};

struct SolveOutput {
  Vec x;
  Vec Dx;  // empty when no direction was given
  Mat Jx;  // empty when not requested
  std::vector<double> residuals;  // ‖x^(ℓ+1) - x^(ℓ)‖
  std::vector<double> jac_norms;  // ‖J_x^(ℓ)‖_F
};

SolveOutput gfb_solve(const SmoothTerm& F, const std::vector<AtomPtr>& G, const Vec& y, const Vec& theta,
                      const Vec* delta, bool want_jac, const GfbConfig& cfg);

// min_x H(x) + G(Kx), with Prox_{τG*} obtained from G by Moreau's identity.
SolveOutput cp_solve(const ProxAtom& H, const AtomPtr& G, const LinearMap& K, const Vec& y, const Vec& theta,
                     const Vec* delta, bool want_jac, const CpConfig& cfg);

struct SchemeOutput {
  Vec x;
  Vec mu;    // Φx
  Vec D_mu;  // Φ D_x
  Mat J_mu;  // Φ J_x
  std::vector<double> jac_norms;
};

class Scheme {
 public:
  virtual ~Scheme() = default;
  virtual std::string name() const = 0;
  virtual Index obs_dim() const = 0;
  virtual Index param_dim() const = 0;
  virtual SchemeOutput solve(const Vec& y, const Vec& theta, const Vec* delta, bool want_jac) const = 0;
  // tr(A ∂₁μ A*) when known analytically.
  virtual std::optional<double> closed_form_dof(const Vec& y, const Vec& theta, const RiskWeight& w) const;
};

using SchemePtr = std::shared_ptr<const Scheme>;

SchemePtr make_gfb_scheme(SmoothPtr F, std::vector<AtomPtr> G, MapPtr phi, Index param_dim, GfbConfig cfg);
SchemePtr make_cp_scheme(AtomPtr H, AtomPtr G, MapPtr K, MapPtr phi, Index param_dim, CpConfig cfg);
// μ(y) = ST(y, θ₀), exact in one evaluation.
SchemePtr make_soft_threshold_scheme(Index P);

struct RiskConfig {
  RiskVariant variant = RiskVariant::FDMC;
  double sigma = 1.0;
  double epsilon = 0;  // FD and FDMC
  Vec delta;           // MC and FDMC
  bool want_gradient = true;
};

struct RiskRun {
  SchemeOutput out;
  RiskReport report;
};

RiskRun run_with_risk(const Scheme& scheme, const Vec& y, const Vec& theta, const RiskWeight& w,
                      const RiskConfig& cfg);

}  // namespace sugar
