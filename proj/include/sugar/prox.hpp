#pragma once

#include "sugar/core.hpp"
#include "sugar/operators.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace sugar {

// Regularization weights θ; every entry strictly positive.
class ParamVector {
 public:
  explicit ParamVector(Vec values);
  const Vec& values() const { return v_; }
  Index size() const { return v_.size(); }
  double operator[](Index i) const { return v_[i]; }

 private:
  Vec v_;
};

struct STJacobians {
  Vec diag_input;  // 1 on the active set, 0 elsewhere (including |t| = ρ)
  Vec jac_rho;     // -sign(t) on the active set
};

Vec soft_threshold(const Vec& t, double rho);
STJacobians soft_threshold_jacs(const Vec& t, double rho);

// ℓ1-ℓ2 shrinkage of nblocks blocks of dimension t.size()/nblocks.
// Planar layout: component d of block i sits at i + d*nblocks.
Vec block_soft_threshold(const Vec& t, Index nblocks, double rho);
Vec block_soft_threshold_jac_input(const Vec& t, Index nblocks, double rho, const Vec& dir);
Vec block_soft_threshold_jac_rho(const Vec& t, Index nblocks, double rho);

// One threshold per band; t is split into rho.size() equal contiguous bands.
Vec multiscale_soft_threshold(const Vec& t, const Vec& rho);
Vec multiscale_soft_threshold_jac_input(const Vec& t, const Vec& rho, const Vec& dir);
Mat multiscale_soft_threshold_jac_theta(const Vec& t, const Vec& rho);

// Singular value thresholding with the spectral Jacobian. The SVD is computed once.
class NuclearProx {
 public:
  NuclearProx(const Mat& x, double rho);

  Mat value() const;
  Mat jac_input(const Mat& dx) const;
  Mat jac_rho() const;
  Index rank() const;
  const Vec& singular_values() const { return s_; }

  static constexpr double kEqualTol = 1e-10;

 private:
  bool transposed_;
  double rho_;
  Mat v_;  // left singular vectors (n1×n, n1 ≥ n2 after the optional transpose)
  Mat u_;  // right singular vectors (n2×n)
  Vec s_;
  Vec f_;  // ST(s, ρ)
};

Mat nuclear_prox(const Mat& x, double rho);
Mat nuclear_prox_jac_input(const Mat& x, double rho, const Mat& dx);
Mat nuclear_prox_jac_theta(const Mat& x, double rho);

// Prox_{ξH} with H(x) = ½‖Φx - y‖².
class QuadraticDataProx {
 public:
  explicit QuadraticDataProx(std::shared_ptr<const GramSolver> gram);

  Vec eval(const Vec& x, const Vec& y, double xi) const;
  Vec jac_input(const Vec& dx, double xi) const;
  Vec jac_obs(const Vec& dy, double xi) const;
  const GramSolver& gram() const { return *gram_; }

 private:
  std::shared_ptr<const GramSolver> gram_;
};

Vec quadratic_data_prox(const Vec& x, const Vec& y, double xi, MapPtr phi);

// Orthogonal projection of (f, u) onto {u = ∇f}; x = [f (N); u (2N)].
class TvProjector {
 public:
  TvProjector(Index n1, Index n2);
  ~TvProjector();
  Vec project(const Vec& fu) const;
  Index n1() const { return n1_; }
  Index n2() const { return n2_; }
  const LinearMap& gradient() const { return *grad_; }

 private:
  Index n1_, n2_;
  MapPtr grad_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Vec tv_constraint_prox(const Vec& fu, Index n1, Index n2);

struct ProxLinearization {
  Vec value;
  std::function<Vec(const Vec&)> input;  // ∂₁Prox[·]
  std::function<Vec(const Vec&)> obs;    // ∂₂Prox[·], observation-space direction
  Mat theta;                             // dim × dim(θ); empty when not requested
};

// Prox_{step·G(·, y, θ)} together with its weak derivatives. θ is the full parameter
// vector of the problem; each atom reads the entries it owns.
class ProxAtom {
 public:
  virtual ~ProxAtom() = default;
  virtual Index dim() const = 0;
  virtual Vec eval(const Vec& t, const Vec& y, const Vec& theta, double step) const = 0;
  virtual ProxLinearization linearize(const Vec& t, const Vec& y, const Vec& theta, double step,
                                      bool want_theta) const = 0;

  Vec jac_input(const Vec& t, const Vec& y, const Vec& theta, double step, const Vec& dir) const;
  Vec jac_obs(const Vec& t, const Vec& y, const Vec& theta, double step, const Vec& dir) const;
  Mat jac_theta(const Vec& t, const Vec& y, const Vec& theta, double step) const;
};

using AtomPtr = std::shared_ptr<const ProxAtom>;

// G = 0.
AtomPtr make_zero_atom(Index dim);
// G = λ‖x[begin, end)‖₁ with λ = θ[theta_index].
AtomPtr make_l1_atom(Index dim, Index theta_index, Index begin = 0, Index end = -1);
// G = λ Σ_i ‖block_i‖ on the blocks stored planar in [begin, begin + nblocks*D).
AtomPtr make_block_l1_atom(Index dim, Index theta_index, Index begin, Index nblocks, Index D);
// G = Σ_j θ[theta_index[j]] ‖band_j‖₁ with bands of band_size entries.
AtomPtr make_multiscale_l1_atom(Index band_size, std::vector<Index> theta_index);
// G = λ‖X‖_* on an n1×n2 matrix stored column-major.
AtomPtr make_nuclear_atom(Index n1, Index n2, Index theta_index);
// H = ½‖Φx - y‖².
AtomPtr make_quadratic_data_atom(std::shared_ptr<const GramSolver> gram);
// Indicator of {u = ∇f} on x = [f; u].
AtomPtr make_tv_constraint_atom(Index n1, Index n2);
// Prox_{step·G*} through Moreau's identity.
AtomPtr make_conjugate_atom(AtomPtr inner);

}  // namespace sugar
