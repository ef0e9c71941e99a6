#include "sugar/risk.hpp"

#include <cmath>

namespace sugar {

RiskVariant parse_risk_variant(const std::string& s) {
  if (s == "closed-form") return RiskVariant::ClosedForm;
  if (s == "mc") return RiskVariant::MC;
  if (s == "fd") return RiskVariant::FD;
  if (s == "fdmc") return RiskVariant::FDMC;
  throw ConfigError("unknown risk variant '" + s + "' (closed-form, mc, fd, fdmc)");
}

std::string to_string(RiskVariant v) {
  switch (v) {
    case RiskVariant::ClosedForm: return "closed-form";
    case RiskVariant::MC: return "mc";
    case RiskVariant::FD: return "fd";
    case RiskVariant::FDMC: return "fdmc";
  }
  return "?";
}

NoiseModel::NoiseModel(double s) : sigma(s) {
  if (!(s > 0) || !std::isfinite(s)) throw ConfigError("noise level σ must be positive");
}

namespace {

void check_dim(const Vec& v, const RiskWeight& w, const char* what) {
  if (v.size() != w.dim())
    throw ConfigError(std::string(what) + " has size " + std::to_string(v.size()) + ", expected " +
                      std::to_string(w.dim()));
}

}  // namespace

double sure_from_dof(const Vec& mu, const Vec& y, const RiskWeight& w, double sigma, double dof) {
  check_dim(mu, w, "estimate");
  check_dim(y, w, "observation");
  const Vec r = mu - y;
  return r.dot(w.apply_AtA(r)) - sigma * sigma * w.trace_AtA() + 2 * sigma * sigma * dof;
}

RiskReport sure_closed_form(const Vec& mu, double trace_jac, const Vec& y, const RiskWeight& w, double sigma) {
  RiskReport r;
  r.variant = RiskVariant::ClosedForm;
  r.dof = trace_jac;
  r.sure = sure_from_dof(mu, y, w, sigma, trace_jac);
  return r;
}

double dof_mc(const Vec& d_mu, const Vec& delta, const RiskWeight& w) {
  check_dim(d_mu, w, "directional derivative");
  check_dim(delta, w, "probe");
  return d_mu.dot(w.apply_AtA(delta));
}

double dof_fd(const MuFn& mu_at, const Vec& y, double eps, const RiskWeight& w) {
  if (!(eps > 0)) throw ConfigError("finite-difference step must be positive");
  const Index p = y.size();
  if (p > kMaxFdDim)
    throw ConfigError("dof_fd needs P+1 solves; P = " + std::to_string(p) + " exceeds " +
                      std::to_string(kMaxFdDim) + ", use dof_fdmc instead");
  const Vec mu = mu_at(y);
  double acc = 0;
  for (Index i = 0; i < p; ++i) {
    Vec yp = y;
    yp[i] += eps;
    const Vec diff = w.apply_AtA(mu_at(yp) - mu);
    acc += diff[i];
  }
  return acc / eps;
}

double dof_fdmc(const Vec& mu, const Vec& mu_pert, double eps, const Vec& delta, const RiskWeight& w) {
  if (!(eps > 0)) throw ConfigError("finite-difference step must be positive");
  check_dim(delta, w, "probe");
  return (mu_pert - mu).dot(w.apply_AtA(delta)) / eps;
}

double dof_fdmc(const MuFn& mu_at, const Vec& y, double eps, const Vec& delta, const RiskWeight& w) {
  return dof_fdmc(mu_at(y), mu_at(y + eps * delta), eps, delta, w);
}

Vec sugar_fdmc(const Mat& j_y, const Mat& j_pert, const Vec& mu, const Vec& y, double eps, const Vec& delta,
               const RiskWeight& w, double sigma) {
  if (j_y.rows() != j_pert.rows() || j_y.cols() != j_pert.cols())
    throw ConfigError("Jacobian shapes differ between y and y + εδ");
  if (j_y.rows() != w.dim()) throw ConfigError("Jacobian rows do not match the observation dimension");
  if (!(eps > 0)) throw ConfigError("finite-difference step must be positive");
  const Vec r = w.apply_AtA(mu - y);
  const Vec ad = w.apply_AtA(delta);
  return 2.0 * j_y.transpose() * r + (2.0 * sigma * sigma / eps) * (j_pert - j_y).transpose() * ad;
}

Vec sugar_fd(const std::function<Mat(const Vec&)>& j_at, const Vec& mu, const Vec& y, double eps,
             const RiskWeight& w, double sigma) {
  const Index p = y.size();
  if (p > kMaxFdDim) throw ConfigError("sugar_fd needs P+1 solves; use sugar_fdmc for large P");
  const Mat j0 = j_at(y);
  Vec g = 2.0 * j0.transpose() * w.apply_AtA(mu - y);
  for (Index i = 0; i < p; ++i) {
    Vec yp = y;
    yp[i] += eps;
    const Vec ai = w.apply_AtA(Vec::Unit(p, i));
    g += (2.0 * sigma * sigma / eps) * (j_at(yp) - j0).transpose() * ai;
  }
  return g;
}

double epsilon_rule(double sigma, double P, double C, double alpha) {
  if (!(sigma > 0) || !(P >= 1) || !(C > 0) || alpha < 0) throw ConfigError("invalid ε-rule inputs");
  return C * sigma * std::pow(P, -alpha);
}

}  // namespace sugar
