#include "sugar/solvers.hpp"

#include <cmath>

namespace sugar {

Mat SmoothTerm::jac_theta(const Vec&, const Vec&, const Vec& theta) const { return Mat::Zero(dim(), theta.size()); }

namespace {

class QuadraticFidelity final : public SmoothTerm {
 public:
  QuadraticFidelity(MapPtr phi, Index dim) : phi_(std::move(phi)), dim_(dim) {
    const double nb = phi_->norm_bound();
    L_ = nb * nb;
  }
  Index dim() const override { return dim_; }
  double lipschitz() const override { return L_; }
  double value(const Vec& x, const Vec& y, const Vec&) const override {
    return 0.5 * (phi_->apply(x.head(phi_->in_dim())) - y).squaredNorm();
  }
  Vec grad(const Vec& x, const Vec& y, const Vec&) const override {
    Vec g = Vec::Zero(dim_);
    g.head(phi_->in_dim()) = phi_->adjoint(phi_->apply(x.head(phi_->in_dim())) - y);
    return g;
  }
  Vec jac_x(const Vec&, const Vec&, const Vec&, const Vec& dx) const override {
    Vec g = Vec::Zero(dim_);
    g.head(phi_->in_dim()) = phi_->adjoint(phi_->apply(dx.head(phi_->in_dim())));
    return g;
  }
  Vec jac_y(const Vec&, const Vec&, const Vec&, const Vec& dy) const override {
    Vec g = Vec::Zero(dim_);
    g.head(phi_->in_dim()) = -phi_->adjoint(dy);
    return g;
  }

 private:
  MapPtr phi_;
  Index dim_;
  double L_;
};

class ZeroSmooth final : public SmoothTerm {
 public:
  explicit ZeroSmooth(Index dim) : dim_(dim) {}
  Index dim() const override { return dim_; }
  double lipschitz() const override { return 0.0; }
  double value(const Vec&, const Vec&, const Vec&) const override { return 0.0; }
  Vec grad(const Vec&, const Vec&, const Vec&) const override { return Vec::Zero(dim_); }
  Vec jac_x(const Vec&, const Vec&, const Vec&, const Vec&) const override { return Vec::Zero(dim_); }
  Vec jac_y(const Vec&, const Vec&, const Vec&, const Vec&) const override { return Vec::Zero(dim_); }

 private:
  Index dim_;
};

void check_finite(const Vec& v, int iter, const char* what) {
  if (!v.allFinite())
    throw NumericalError(std::string("non-finite ") + what + " at iteration " + std::to_string(iter));
}

void check_finite(const Mat& m, int iter, const char* what) {
  if (!m.allFinite())
    throw NumericalError(std::string("non-finite ") + what + " at iteration " + std::to_string(iter));
}

}  // namespace

SmoothPtr make_quadratic_fidelity(MapPtr phi, Index dim) {
  if (dim < 0) dim = phi->in_dim();
  if (dim < phi->in_dim()) throw ConfigError("fidelity domain smaller than the operator input");
  return std::make_shared<QuadraticFidelity>(std::move(phi), dim);
}

SmoothPtr make_zero_smooth(Index dim) { return std::make_shared<ZeroSmooth>(dim); }

SolveOutput gfb_solve(const SmoothTerm& F, const std::vector<AtomPtr>& G, const Vec& y, const Vec& theta,
                      const Vec* delta, bool want_jac, const GfbConfig& cfg) {
  if (G.empty()) throw ConfigError("GFB needs at least one proximal term");
  if (cfg.iters < 1) throw ConfigError("iteration count must be positive");
  const Index n = F.dim();
  for (const auto& g : G)
    if (g->dim() != n) throw ConfigError("proximal term dimension differs from the smooth term");
  const double L = F.lipschitz();
  const double nu = cfg.nu > 0 ? cfg.nu : (L > 0 ? 1.0 / L : 1.0);
  if (!(nu > 0) || (L > 0 && nu >= 2.0 / L))
    throw ConfigError("GFB step ν = " + std::to_string(nu) + " outside ]0, 2/L[ with L = " + std::to_string(L));

  const std::size_t Q = G.size();
  const double step = nu * double(Q);
  const Index m = theta.size();
  const bool with_d = delta != nullptr;

  Vec x = Vec::Zero(n), Dx;
  std::vector<Vec> z(Q, Vec::Zero(n)), Dz;
  Mat Jx;
  std::vector<Mat> Jz;
  if (with_d) {
    Dx = Vec::Zero(n);
    Dz.assign(Q, Vec::Zero(n));
  }
  if (want_jac) {
    Jx = Mat::Zero(n, m);
    Jz.assign(Q, Mat::Zero(n, m));
  }

  SolveOutput out;
  out.residuals.reserve(cfg.iters);
  for (int it = 0; it < cfg.iters; ++it) {
    const Vec g = F.grad(x, y, theta);
    Vec dgrad;
    if (with_d) dgrad = F.jac_x(x, y, theta, Dx) + F.jac_y(x, y, theta, *delta);
    Mat jgrad;
    if (want_jac) {
      jgrad = F.jac_theta(x, y, theta);
      for (Index c = 0; c < m; ++c) jgrad.col(c) += F.jac_x(x, y, theta, Jx.col(c));
    }

    Vec x_new = Vec::Zero(n), Dx_new;
    Mat Jx_new;
    if (with_d) Dx_new = Vec::Zero(n);
    if (want_jac) Jx_new = Mat::Zero(n, m);
    for (std::size_t k = 0; k < Q; ++k) {
      const Vec Zk = 2 * x - z[k] - nu * g;
      if (!with_d && !want_jac) {
        z[k] += G[k]->eval(Zk, y, theta, step) - x;
      } else {
        const auto lin = G[k]->linearize(Zk, y, theta, step, want_jac);
        if (with_d) {
          const Vec DZ = 2 * Dx - Dz[k] - nu * dgrad;
          Dz[k] += lin.input(DZ) + lin.obs(*delta) - Dx;
          Dx_new += Dz[k];
        }
        if (want_jac) {
          Mat JZ = 2 * Jx - Jz[k] - nu * jgrad;
          Mat upd(n, m);
          for (Index c = 0; c < m; ++c) upd.col(c) = lin.input(JZ.col(c));
          Jz[k] += upd + lin.theta - Jx;
          Jx_new += Jz[k];
        }
        z[k] += lin.value - x;
      }
      x_new += z[k];
    }
    x_new /= double(Q);
    check_finite(x_new, it, "GFB iterate");
    out.residuals.push_back((x_new - x).norm());
    x = std::move(x_new);
    if (with_d) {
      Dx = Dx_new / double(Q);
      check_finite(Dx, it, "GFB directional derivative");
    }
    if (want_jac) {
      Jx = Jx_new / double(Q);
      check_finite(Jx, it, "GFB Jacobian");
      out.jac_norms.push_back(Jx.norm());
    }
  }
  out.x = std::move(x);
  out.Dx = std::move(Dx);
  out.Jx = std::move(Jx);
  return out;
}

SolveOutput cp_solve(const ProxAtom& H, const AtomPtr& G, const LinearMap& K, const Vec& y, const Vec& theta,
                     const Vec* delta, bool want_jac, const CpConfig& cfg) {
  if (cfg.iters < 1) throw ConfigError("iteration count must be positive");
  const Index n = K.in_dim(), p = K.out_dim(), m = theta.size();
  if (H.dim() != n || G->dim() != p) throw ConfigError("CP term dimensions do not match K");
  const double kn = K.norm_bound();
  if (!(cfg.balance > 0)) throw ConfigError("CP step balance must be positive");
  const double tau = cfg.tau > 0 ? cfg.tau : 0.99 / (cfg.balance * kn);
  const double xi = cfg.xi > 0 ? cfg.xi : 0.99 * cfg.balance / kn;
  if (!(tau > 0) || !(xi > 0) || tau * xi * kn * kn >= 1.0)
    throw ConfigError("CP steps violate τξ‖K‖² < 1 (τ = " + std::to_string(tau) + ", ξ = " + std::to_string(xi) +
                      ", ‖K‖ = " + std::to_string(kn) + ")");
  if (cfg.zeta < 0 || cfg.zeta > 1) throw ConfigError("CP relaxation ζ must lie in [0, 1]");
  const auto Gc = make_conjugate_atom(G);
  const bool with_d = delta != nullptr;
  const bool lin_needed = with_d || want_jac;

  Vec x = Vec::Zero(n), xt = Vec::Zero(n), u = Vec::Zero(p);
  Vec Dx, Dxt, Du;
  Mat Jx, Jxt, Ju;
  if (with_d) {
    Dx = Vec::Zero(n);
    Dxt = Vec::Zero(n);
    Du = Vec::Zero(p);
  }
  if (want_jac) {
    Jx = Mat::Zero(n, m);
    Jxt = Mat::Zero(n, m);
    Ju = Mat::Zero(p, m);
  }

  SolveOutput out;
  out.residuals.reserve(cfg.iters);
  for (int it = 0; it < cfg.iters; ++it) {
    const Vec U = u + tau * K.apply(xt);
    Vec x_new;
    if (!lin_needed) {
      u = Gc->eval(U, y, theta, tau);
      x_new = H.eval(x - xi * K.adjoint(u), y, theta, xi);
    } else {
      const auto lu = Gc->linearize(U, y, theta, tau, want_jac);
      u = lu.value;
      const Vec X = x - xi * K.adjoint(u);
      const auto lx = H.linearize(X, y, theta, xi, want_jac);
      x_new = lx.value;
      if (with_d) {
        Du = lu.input(Du + tau * K.apply(Dxt)) + lu.obs(*delta);
        const Vec Dx_new = lx.input(Dx - xi * K.adjoint(Du)) + lx.obs(*delta);
        Dxt = Dx_new + cfg.zeta * (Dx_new - Dx);
        Dx = Dx_new;
        check_finite(Dx, it, "CP directional derivative");
      }
      if (want_jac) {
        Mat Ju_new = lu.theta;
        for (Index c = 0; c < m; ++c) Ju_new.col(c) += lu.input(Ju.col(c) + tau * K.apply(Jxt.col(c)));
        Ju = std::move(Ju_new);
        Mat Jx_new = lx.theta;
        for (Index c = 0; c < m; ++c) Jx_new.col(c) += lx.input(Jx.col(c) - xi * K.adjoint(Ju.col(c)));
        Jxt = Jx_new + cfg.zeta * (Jx_new - Jx);
        Jx = std::move(Jx_new);
        check_finite(Jx, it, "CP Jacobian");
        out.jac_norms.push_back(Jx.norm());
      }
    }
    check_finite(x_new, it, "CP iterate");
    xt = x_new + cfg.zeta * (x_new - x);
    out.residuals.push_back((x_new - x).norm());
    x = std::move(x_new);
  }
  out.x = std::move(x);
  out.Dx = std::move(Dx);
  out.Jx = std::move(Jx);
  return out;
}

std::optional<double> Scheme::closed_form_dof(const Vec&, const Vec&, const RiskWeight&) const {
  return std::nullopt;
}

namespace {

SchemeOutput finish(const LinearMap& phi, SolveOutput&& s) {
  SchemeOutput o;
  const Index n = phi.in_dim();
  o.mu = phi.apply(s.x.head(n));
  if (s.Dx.size()) o.D_mu = phi.apply(s.Dx.head(n));
  if (s.Jx.size()) {
    o.J_mu.resize(phi.out_dim(), s.Jx.cols());
    for (Index c = 0; c < s.Jx.cols(); ++c) o.J_mu.col(c) = phi.apply(s.Jx.col(c).head(n));
  }
  o.x = std::move(s.x);
  o.jac_norms = std::move(s.jac_norms);
  return o;
}

class GfbScheme final : public Scheme {
 public:
  GfbScheme(SmoothPtr F, std::vector<AtomPtr> G, MapPtr phi, Index m, GfbConfig cfg)
      : F_(std::move(F)), G_(std::move(G)), phi_(std::move(phi)), m_(m), cfg_(cfg) {}
  std::string name() const override { return "gfb"; }
  Index obs_dim() const override { return phi_->out_dim(); }
  Index param_dim() const override { return m_; }
  SchemeOutput solve(const Vec& y, const Vec& theta, const Vec* delta, bool want_jac) const override {
    return finish(*phi_, gfb_solve(*F_, G_, y, theta, delta, want_jac, cfg_));
  }

 private:
  SmoothPtr F_;
  std::vector<AtomPtr> G_;
  MapPtr phi_;
  Index m_;
  GfbConfig cfg_;
};

class CpScheme final : public Scheme {
 public:
  CpScheme(AtomPtr H, AtomPtr G, MapPtr K, MapPtr phi, Index m, CpConfig cfg)
      : H_(std::move(H)), G_(std::move(G)), K_(std::move(K)), phi_(std::move(phi)), m_(m), cfg_(cfg) {}
  std::string name() const override { return "cp"; }
  Index obs_dim() const override { return phi_->out_dim(); }
  Index param_dim() const override { return m_; }
  SchemeOutput solve(const Vec& y, const Vec& theta, const Vec* delta, bool want_jac) const override {
    return finish(*phi_, cp_solve(*H_, G_, *K_, y, theta, delta, want_jac, cfg_));
  }

 private:
  AtomPtr H_, G_;
  MapPtr K_, phi_;
  Index m_;
  CpConfig cfg_;
};

class SoftThresholdScheme final : public Scheme {
 public:
  explicit SoftThresholdScheme(Index P) : P_(P) {}
  std::string name() const override { return "soft-threshold"; }
  Index obs_dim() const override { return P_; }
  Index param_dim() const override { return 1; }
  SchemeOutput solve(const Vec& y, const Vec& theta, const Vec* delta, bool want_jac) const override {
    SchemeOutput o;
    const auto j = soft_threshold_jacs(y, theta[0]);
    o.x = soft_threshold(y, theta[0]);
    o.mu = o.x;
    if (delta) o.D_mu = j.diag_input.cwiseProduct(*delta);
    if (want_jac) o.J_mu = j.jac_rho;
    return o;
  }
  std::optional<double> closed_form_dof(const Vec& y, const Vec& theta, const RiskWeight& w) const override {
    const Vec d = soft_threshold_jacs(y, theta[0]).diag_input;
    if (w.mode() == RiskMode::Prediction) return d.sum();
    double t = 0;
    for (Index i = 0; i < d.size(); ++i)
      if (d[i] != 0) t += w.apply_AtA(Vec::Unit(P_, i))[i];
    return t;
  }

 private:
  Index P_;
};

}  // namespace

SchemePtr make_gfb_scheme(SmoothPtr F, std::vector<AtomPtr> G, MapPtr phi, Index param_dim, GfbConfig cfg) {
  return std::make_shared<GfbScheme>(std::move(F), std::move(G), std::move(phi), param_dim, cfg);
}

SchemePtr make_cp_scheme(AtomPtr H, AtomPtr G, MapPtr K, MapPtr phi, Index param_dim, CpConfig cfg) {
  return std::make_shared<CpScheme>(std::move(H), std::move(G), std::move(K), std::move(phi), param_dim, cfg);
}

SchemePtr make_soft_threshold_scheme(Index P) { return std::make_shared<SoftThresholdScheme>(P); }

RiskRun run_with_risk(const Scheme& scheme, const Vec& y, const Vec& theta, const RiskWeight& w,
                      const RiskConfig& cfg) {
  if (theta.size() != scheme.param_dim())
    throw ConfigError("θ has " + std::to_string(theta.size()) + " entries, scheme expects " +
                      std::to_string(scheme.param_dim()));
  RiskRun run;
  auto& rep = run.report;
  rep.variant = cfg.variant;
  switch (cfg.variant) {
    case RiskVariant::ClosedForm: {
      run.out = scheme.solve(y, theta, nullptr, false);
      rep.solver_passes = 1;
      const auto dof = scheme.closed_form_dof(y, theta, w);
      if (!dof) throw ConfigError("scheme '" + scheme.name() + "' has no closed-form degrees of freedom");
      const auto r = sure_closed_form(run.out.mu, *dof, y, w, cfg.sigma);
      rep.sure = r.sure;
      rep.dof = r.dof;
      break;
    }
    case RiskVariant::MC: {
      if (cfg.delta.size() != y.size()) throw ConfigError("MC risk needs a probe δ of size P");
      run.out = scheme.solve(y, theta, &cfg.delta, false);
      rep.solver_passes = 1;
      rep.dof = dof_mc(run.out.D_mu, cfg.delta, w);
      rep.sure = sure_from_dof(run.out.mu, y, w, cfg.sigma, rep.dof);
      rep.probe = cfg.delta;
      break;
    }
    case RiskVariant::FD: {
      if (y.size() > kMaxFdDim) throw ConfigError("FD risk needs P+1 solves; use the fdmc variant for large P");
      run.out = scheme.solve(y, theta, nullptr, cfg.want_gradient);
      rep.solver_passes = 1;
      std::vector<SchemeOutput> pert;
      pert.reserve(y.size());
      for (Index i = 0; i < y.size(); ++i) {
        Vec yp = y;
        yp[i] += cfg.epsilon;
        pert.push_back(scheme.solve(yp, theta, nullptr, cfg.want_gradient));
        ++rep.solver_passes;
      }
      double acc = 0;
      for (Index i = 0; i < y.size(); ++i) acc += w.apply_AtA(pert[i].mu - run.out.mu)[i];
      rep.dof = acc / cfg.epsilon;
      rep.epsilon = cfg.epsilon;
      rep.sure = sure_from_dof(run.out.mu, y, w, cfg.sigma, rep.dof);
      if (cfg.want_gradient) {
        Vec g = 2.0 * run.out.J_mu.transpose() * w.apply_AtA(run.out.mu - y);
        for (Index i = 0; i < y.size(); ++i)
          g += (2 * cfg.sigma * cfg.sigma / cfg.epsilon) * (pert[i].J_mu - run.out.J_mu).transpose() *
               w.apply_AtA(Vec::Unit(y.size(), i));
        rep.sugar = g;
      }
      break;
    }
    case RiskVariant::FDMC: {
      if (cfg.delta.size() != y.size()) throw ConfigError("FDMC risk needs a probe δ of size P");
      if (!(cfg.epsilon > 0)) throw ConfigError("FDMC risk needs ε > 0");
      run.out = scheme.solve(y, theta, nullptr, cfg.want_gradient);
      const auto pert = scheme.solve(y + cfg.epsilon * cfg.delta, theta, nullptr, cfg.want_gradient);
      rep.solver_passes = 2;
      rep.dof = dof_fdmc(run.out.mu, pert.mu, cfg.epsilon, cfg.delta, w);
      rep.sure = sure_from_dof(run.out.mu, y, w, cfg.sigma, rep.dof);
      rep.epsilon = cfg.epsilon;
      rep.probe = cfg.delta;
      if (cfg.want_gradient)
        rep.sugar = sugar_fdmc(run.out.J_mu, pert.J_mu, run.out.mu, y, cfg.epsilon, cfg.delta, w, cfg.sigma);
      break;
    }
  }
  if (!std::isfinite(rep.sure)) throw NumericalError("risk estimate is not finite");
  return run;
}

}  // namespace sugar
