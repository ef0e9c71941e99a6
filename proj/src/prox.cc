#include "sugar/prox.hpp"

#include "fft.hpp"

#include <cmath>

namespace sugar {

ParamVector::ParamVector(Vec values) : v_(std::move(values)) {
  if (v_.size() == 0) throw ConfigError("parameter vector is empty");
  for (Index i = 0; i < v_.size(); ++i)
    if (!(v_[i] > 0) || !std::isfinite(v_[i]))
      throw ConfigError("regularization parameter " + std::to_string(i) + " must be positive and finite");
}

Vec soft_threshold(const Vec& t, double rho) {
  Vec out(t.size());
  for (Index i = 0; i < t.size(); ++i) {
    const double a = std::abs(t[i]);
    out[i] = a > rho ? (t[i] > 0 ? a - rho : rho - a) : 0.0;
  }
  return out;
}

STJacobians soft_threshold_jacs(const Vec& t, double rho) {
  STJacobians j{Vec::Zero(t.size()), Vec::Zero(t.size())};
  for (Index i = 0; i < t.size(); ++i)
    if (std::abs(t[i]) > rho) {
      j.diag_input[i] = 1.0;
      j.jac_rho[i] = t[i] > 0 ? -1.0 : 1.0;
    }
  return j;
}

namespace {

Index block_dim(const Vec& t, Index nblocks) {
  if (nblocks <= 0 || t.size() % nblocks != 0) throw ConfigError("block layout does not divide the vector");
  return t.size() / nblocks;
}

double block_norm(const Vec& t, Index nblocks, Index D, Index i) {
  double s = 0;
  for (Index d = 0; d < D; ++d) s += t[i + d * nblocks] * t[i + d * nblocks];
  return std::sqrt(s);
}

}  // namespace

Vec block_soft_threshold(const Vec& t, Index nblocks, double rho) {
  const Index D = block_dim(t, nblocks);
  Vec out = Vec::Zero(t.size());
  for (Index i = 0; i < nblocks; ++i) {
    const double n = block_norm(t, nblocks, D, i);
    if (n <= rho) continue;
    const double f = 1.0 - rho / n;
    for (Index d = 0; d < D; ++d) out[i + d * nblocks] = f * t[i + d * nblocks];
  }
  return out;
}

Vec block_soft_threshold_jac_input(const Vec& t, Index nblocks, double rho, const Vec& dir) {
  const Index D = block_dim(t, nblocks);
  Vec out = Vec::Zero(t.size());
  for (Index i = 0; i < nblocks; ++i) {
    const double n = block_norm(t, nblocks, D, i);
    if (n <= rho) continue;
    double td = 0;
    for (Index d = 0; d < D; ++d) td += t[i + d * nblocks] * dir[i + d * nblocks];
    const double c = rho / n;
    for (Index d = 0; d < D; ++d) {
      const Index k = i + d * nblocks;
      const double perp = dir[k] - t[k] * td / (n * n);
      out[k] = dir[k] - c * perp;
    }
  }
  return out;
}

Vec block_soft_threshold_jac_rho(const Vec& t, Index nblocks, double rho) {
  const Index D = block_dim(t, nblocks);
  Vec out = Vec::Zero(t.size());
  for (Index i = 0; i < nblocks; ++i) {
    const double n = block_norm(t, nblocks, D, i);
    if (n <= rho) continue;
    for (Index d = 0; d < D; ++d) out[i + d * nblocks] = -t[i + d * nblocks] / n;
  }
  return out;
}

namespace {

Index band_size(const Vec& t, const Vec& rho) {
  if (rho.size() == 0 || t.size() % rho.size() != 0)
    throw ConfigError("band count " + std::to_string(rho.size()) + " does not divide coefficient length " +
                      std::to_string(t.size()));
  return t.size() / rho.size();
}

}  // namespace

Vec multiscale_soft_threshold(const Vec& t, const Vec& rho) {
  const Index b = band_size(t, rho);
  Vec out(t.size());
  for (Index j = 0; j < rho.size(); ++j) out.segment(j * b, b) = soft_threshold(t.segment(j * b, b), rho[j]);
  return out;
}

Vec multiscale_soft_threshold_jac_input(const Vec& t, const Vec& rho, const Vec& dir) {
  const Index b = band_size(t, rho);
  Vec out(t.size());
  for (Index j = 0; j < rho.size(); ++j) {
    const auto jj = soft_threshold_jacs(t.segment(j * b, b), rho[j]);
    out.segment(j * b, b) = jj.diag_input.cwiseProduct(dir.segment(j * b, b));
  }
  return out;
}

Mat multiscale_soft_threshold_jac_theta(const Vec& t, const Vec& rho) {
  const Index b = band_size(t, rho);
  Mat out = Mat::Zero(t.size(), rho.size());
  for (Index j = 0; j < rho.size(); ++j)
    out.col(j).segment(j * b, b) = soft_threshold_jacs(t.segment(j * b, b), rho[j]).jac_rho;
  return out;
}

NuclearProx::NuclearProx(const Mat& x, double rho) : transposed_(x.rows() < x.cols()), rho_(rho) {
  const Mat a = transposed_ ? Mat(x.transpose()) : x;
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD failed in nuclear prox");
  v_ = svd.matrixU();
  u_ = svd.matrixV();
  s_ = svd.singularValues();
  for (Index k = 0; k < v_.cols(); ++k) {
    Index imax;
    v_.col(k).cwiseAbs().maxCoeff(&imax);
    if (v_(imax, k) < 0) {
      v_.col(k) *= -1;
      u_.col(k) *= -1;
    }
  }
  f_ = soft_threshold(s_, rho);
}

Mat NuclearProx::value() const {
  Mat r = v_ * f_.asDiagonal() * u_.transpose();
  return transposed_ ? Mat(r.transpose()) : r;
}

Index NuclearProx::rank() const { return (s_.array() > rho_).count(); }

Mat NuclearProx::jac_rho() const {
  const Vec j = soft_threshold_jacs(s_, rho_).jac_rho;
  Mat r = v_ * j.asDiagonal() * u_.transpose();
  return transposed_ ? Mat(r.transpose()) : r;
}

Mat NuclearProx::jac_input(const Mat& dx_in) const {
  const Mat dx = transposed_ ? Mat(dx_in.transpose()) : dx_in;
  const Index n = s_.size();
  const double smax = n ? s_.maxCoeff() : 0.0;
  const Vec d1 = soft_threshold_jacs(s_, rho_).diag_input;
  const Mat vd = v_.transpose() * dx;  // n × n2
  const Mat db = vd * u_;              // n × n
  Mat core(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) {
        core(i, i) = d1[i] * db(i, i);
        continue;
      }
      const double sym = 0.5 * (db(i, j) + db(j, i));
      const double asym = 0.5 * (db(i, j) - db(j, i));
      const double gs = std::abs(s_[i] - s_[j]) < kEqualTol * smax ? d1[i] : (f_[i] - f_[j]) / (s_[i] - s_[j]);
      const double ga = (s_[i] > 0 || s_[j] > 0) ? (f_[i] + f_[j]) / (s_[i] + s_[j]) : d1[i];
      core(i, j) = sym * gs + asym * ga;
    }
  Mat r = v_ * core * u_.transpose();
  // Rows outside the left singular subspace (zero-extended part of the spectrum).
  Vec ratio(n);
  for (Index k = 0; k < n; ++k) ratio[k] = s_[k] > 0 ? f_[k] / s_[k] : 0.0;
  const Mat perp = dx * u_ - v_ * db;
  r += perp * ratio.asDiagonal() * u_.transpose();
  return transposed_ ? Mat(r.transpose()) : r;
}

Mat nuclear_prox(const Mat& x, double rho) { return NuclearProx(x, rho).value(); }

Mat nuclear_prox_jac_input(const Mat& x, double rho, const Mat& dx) { return NuclearProx(x, rho).jac_input(dx); }

Mat nuclear_prox_jac_theta(const Mat& x, double rho) { return NuclearProx(x, rho).jac_rho(); }

QuadraticDataProx::QuadraticDataProx(std::shared_ptr<const GramSolver> gram) : gram_(std::move(gram)) {}

Vec QuadraticDataProx::eval(const Vec& x, const Vec& y, double xi) const {
  const auto& phi = gram_->phi();
  const Vec w = x + xi * phi.adjoint(y);
  return w - xi * phi.adjoint(gram_->resolvent(xi, phi.apply(w)));
}

Vec QuadraticDataProx::jac_input(const Vec& dx, double xi) const {
  const auto& phi = gram_->phi();
  return dx - xi * phi.adjoint(gram_->resolvent(xi, phi.apply(dx)));
}

Vec QuadraticDataProx::jac_obs(const Vec& dy, double xi) const {
  const auto& phi = gram_->phi();
  const Vec pdy = phi.adjoint(dy);
  return xi * pdy - xi * xi * phi.adjoint(gram_->resolvent(xi, phi.apply(pdy)));
}

Vec quadratic_data_prox(const Vec& x, const Vec& y, double xi, MapPtr phi) {
  if (!(xi > 0)) throw ConfigError("prox step must be positive");
  return QuadraticDataProx(std::make_shared<GramSolver>(std::move(phi))).eval(x, y, xi);
}

struct TvProjector::Impl {
  Impl(Index n1, Index n2) : poisson(n1, n2) {}
  detail::NeumannPoisson poisson;
};

TvProjector::TvProjector(Index n1, Index n2)
    : n1_(n1), n2_(n2), grad_(make_discrete_gradient(n1, n2)), impl_(std::make_unique<Impl>(n1, n2)) {}

TvProjector::~TvProjector() = default;

Vec TvProjector::project(const Vec& fu) const {
  const Index n = n1_ * n2_;
  if (fu.size() != 3 * n) throw ConfigError("TV projection expects [f; u] of size 3N");
  const Vec rhs = fu.head(n) + grad_->adjoint(fu.tail(2 * n));
  Vec out(3 * n);
  out.head(n) = impl_->poisson.solve(rhs);
  out.tail(2 * n) = grad_->apply(out.head(n));
  if (!out.allFinite()) throw NumericalError("TV projection produced non-finite values");
  return out;
}

Vec tv_constraint_prox(const Vec& fu, Index n1, Index n2) { return TvProjector(n1, n2).project(fu); }

Vec ProxAtom::jac_input(const Vec& t, const Vec& y, const Vec& theta, double step, const Vec& dir) const {
  return linearize(t, y, theta, step, false).input(dir);
}

Vec ProxAtom::jac_obs(const Vec& t, const Vec& y, const Vec& theta, double step, const Vec& dir) const {
  return linearize(t, y, theta, step, false).obs(dir);
}

Mat ProxAtom::jac_theta(const Vec& t, const Vec& y, const Vec& theta, double step) const {
  return linearize(t, y, theta, step, true).theta;
}

namespace {

std::function<Vec(const Vec&)> zero_obs(Index dim) {
  return [dim](const Vec&) { return Vec::Zero(dim); };
}

void check_index(Index i, const Vec& theta) {
  if (i < 0 || i >= theta.size())
    throw ConfigError("atom parameter index " + std::to_string(i) + " outside θ of size " +
                      std::to_string(theta.size()));
}

class ZeroAtom final : public ProxAtom {
 public:
  explicit ZeroAtom(Index dim) : dim_(dim) {}
  Index dim() const override { return dim_; }
  Vec eval(const Vec& t, const Vec&, const Vec&, double) const override { return t; }
  ProxLinearization linearize(const Vec& t, const Vec&, const Vec& theta, double, bool want) const override {
    return {t, [](const Vec& d) { return d; }, zero_obs(dim_),
            want ? Mat(Mat::Zero(dim_, theta.size())) : Mat()};
  }

 private:
  Index dim_;
};

class L1Atom final : public ProxAtom {
 public:
  L1Atom(Index dim, Index k, Index b, Index e) : dim_(dim), k_(k), b_(b), e_(e) {}
  Index dim() const override { return dim_; }
  Vec eval(const Vec& t, const Vec&, const Vec& theta, double step) const override {
    check_index(k_, theta);
    Vec out = t;
    out.segment(b_, e_ - b_) = soft_threshold(t.segment(b_, e_ - b_), step * theta[k_]);
    return out;
  }
  ProxLinearization linearize(const Vec& t, const Vec&, const Vec& theta, double step, bool want) const override {
    check_index(k_, theta);
    const double rho = step * theta[k_];
    Vec seg = t.segment(b_, e_ - b_);
    auto jj = std::make_shared<STJacobians>(soft_threshold_jacs(seg, rho));
    ProxLinearization lin;
    lin.value = t;
    lin.value.segment(b_, e_ - b_) = soft_threshold(seg, rho);
    const Index b = b_, len = e_ - b_;
    lin.input = [jj, b, len](const Vec& d) {
      Vec r = d;
      r.segment(b, len) = jj->diag_input.cwiseProduct(d.segment(b, len));
      return r;
    };
    lin.obs = zero_obs(dim_);
    if (want) {
      lin.theta = Mat::Zero(dim_, theta.size());
      lin.theta.col(k_).segment(b_, len) = step * jj->jac_rho;
    }
    return lin;
  }

 private:
  Index dim_, k_, b_, e_;
};

class BlockL1Atom final : public ProxAtom {
 public:
  BlockL1Atom(Index dim, Index k, Index b, Index nb, Index D) : dim_(dim), k_(k), b_(b), nb_(nb), D_(D) {}
  Index dim() const override { return dim_; }
  Vec eval(const Vec& t, const Vec&, const Vec& theta, double step) const override {
    check_index(k_, theta);
    Vec out = t;
    out.segment(b_, nb_ * D_) = block_soft_threshold(t.segment(b_, nb_ * D_), nb_, step * theta[k_]);
    return out;
  }
  ProxLinearization linearize(const Vec& t, const Vec&, const Vec& theta, double step, bool want) const override {
    check_index(k_, theta);
    const double rho = step * theta[k_];
    auto seg = std::make_shared<Vec>(t.segment(b_, nb_ * D_));
    ProxLinearization lin;
    lin.value = t;
    lin.value.segment(b_, nb_ * D_) = block_soft_threshold(*seg, nb_, rho);
    const Index b = b_, nb = nb_, len = nb_ * D_;
    lin.input = [seg, b, nb, len, rho](const Vec& d) {
      Vec r = d;
      r.segment(b, len) = block_soft_threshold_jac_input(*seg, nb, rho, d.segment(b, len));
      return r;
    };
    lin.obs = zero_obs(dim_);
    if (want) {
      lin.theta = Mat::Zero(dim_, theta.size());
      lin.theta.col(k_).segment(b_, len) = step * block_soft_threshold_jac_rho(*seg, nb_, rho);
    }
    return lin;
  }

 private:
  Index dim_, k_, b_, nb_, D_;
};

class MultiscaleL1Atom final : public ProxAtom {
 public:
  MultiscaleL1Atom(Index band, std::vector<Index> idx) : band_(band), idx_(std::move(idx)) {}
  Index dim() const override { return band_ * Index(idx_.size()); }

  Vec rho(const Vec& theta, double step) const {
    Vec r(idx_.size());
    for (std::size_t j = 0; j < idx_.size(); ++j) {
      check_index(idx_[j], theta);
      r[Index(j)] = step * theta[idx_[j]];
    }
    return r;
  }
  Vec eval(const Vec& t, const Vec&, const Vec& theta, double step) const override {
    return multiscale_soft_threshold(t, rho(theta, step));
  }
  ProxLinearization linearize(const Vec& t, const Vec&, const Vec& theta, double step, bool want) const override {
    const Vec r = rho(theta, step);
    auto mask = std::make_shared<Vec>(dim());
    for (Index j = 0; j < r.size(); ++j)
      mask->segment(j * band_, band_) = soft_threshold_jacs(t.segment(j * band_, band_), r[j]).diag_input;
    ProxLinearization lin;
    lin.value = multiscale_soft_threshold(t, r);
    lin.input = [mask](const Vec& d) { return Vec(mask->cwiseProduct(d)); };
    lin.obs = zero_obs(dim());
    if (want) {
      const Mat jb = multiscale_soft_threshold_jac_theta(t, r);
      lin.theta = Mat::Zero(dim(), theta.size());
      for (std::size_t j = 0; j < idx_.size(); ++j) lin.theta.col(idx_[j]) += step * jb.col(Index(j));
    }
    return lin;
  }

 private:
  Index band_;
  std::vector<Index> idx_;
};

class NuclearAtom final : public ProxAtom {
 public:
  NuclearAtom(Index n1, Index n2, Index k) : n1_(n1), n2_(n2), k_(k) {}
  Index dim() const override { return n1_ * n2_; }
  Vec eval(const Vec& t, const Vec&, const Vec& theta, double step) const override {
    check_index(k_, theta);
    const Mat v = nuclear_prox(Eigen::Map<const Mat>(t.data(), n1_, n2_), step * theta[k_]);
    return Eigen::Map<const Vec>(v.data(), v.size());
  }
  ProxLinearization linearize(const Vec& t, const Vec&, const Vec& theta, double step, bool want) const override {
    check_index(k_, theta);
    auto np = std::make_shared<NuclearProx>(Eigen::Map<const Mat>(t.data(), n1_, n2_), step * theta[k_]);
    ProxLinearization lin;
    const Mat v = np->value();
    lin.value = Eigen::Map<const Vec>(v.data(), v.size());
    const Index n1 = n1_, n2 = n2_;
    lin.input = [np, n1, n2](const Vec& d) {
      const Mat r = np->jac_input(Eigen::Map<const Mat>(d.data(), n1, n2));
      return Vec(Eigen::Map<const Vec>(r.data(), r.size()));
    };
    lin.obs = zero_obs(dim());
    if (want) {
      lin.theta = Mat::Zero(dim(), theta.size());
      const Mat jr = np->jac_rho();
      lin.theta.col(k_) = step * Eigen::Map<const Vec>(jr.data(), jr.size());
    }
    return lin;
  }

 private:
  Index n1_, n2_, k_;
};

class QuadraticDataAtom final : public ProxAtom {
 public:
  explicit QuadraticDataAtom(std::shared_ptr<const GramSolver> gram)
      : prox_(std::make_shared<QuadraticDataProx>(std::move(gram))) {}
  Index dim() const override { return prox_->gram().phi().in_dim(); }
  Vec eval(const Vec& t, const Vec& y, const Vec&, double step) const override { return prox_->eval(t, y, step); }
  ProxLinearization linearize(const Vec& t, const Vec& y, const Vec& theta, double step, bool want) const override {
    auto p = prox_;
    return {p->eval(t, y, step), [p, step](const Vec& d) { return p->jac_input(d, step); },
            [p, step](const Vec& d) { return p->jac_obs(d, step); },
            want ? Mat(Mat::Zero(dim(), theta.size())) : Mat()};
  }

 private:
  std::shared_ptr<const QuadraticDataProx> prox_;
};

class TvConstraintAtom final : public ProxAtom {
 public:
  TvConstraintAtom(Index n1, Index n2) : proj_(std::make_shared<TvProjector>(n1, n2)) {}
  Index dim() const override { return 3 * proj_->n1() * proj_->n2(); }
  Vec eval(const Vec& t, const Vec&, const Vec&, double) const override { return proj_->project(t); }
  ProxLinearization linearize(const Vec& t, const Vec&, const Vec& theta, double, bool want) const override {
    auto p = proj_;
    return {p->project(t), [p](const Vec& d) { return p->project(d); }, zero_obs(dim()),
            want ? Mat(Mat::Zero(dim(), theta.size())) : Mat()};
  }

 private:
  std::shared_ptr<const TvProjector> proj_;
};

// Prox_{τG*}(u) = u - τ Prox_{G/τ}(u/τ).
class ConjugateAtom final : public ProxAtom {
 public:
  explicit ConjugateAtom(AtomPtr inner) : inner_(std::move(inner)) {}
  Index dim() const override { return inner_->dim(); }
  Vec eval(const Vec& u, const Vec& y, const Vec& theta, double tau) const override {
    if (!(tau > 0)) throw ConfigError("conjugate prox step must be positive");
    return u - tau * inner_->eval(u / tau, y, theta, 1.0 / tau);
  }
  ProxLinearization linearize(const Vec& u, const Vec& y, const Vec& theta, double tau, bool want) const override {
    if (!(tau > 0)) throw ConfigError("conjugate prox step must be positive");
    auto in = std::make_shared<ProxLinearization>(inner_->linearize(u / tau, y, theta, 1.0 / tau, want));
    ProxLinearization lin;
    lin.value = u - tau * in->value;
    lin.input = [in](const Vec& d) { return Vec(d - in->input(d)); };
    lin.obs = [in, tau](const Vec& d) { return Vec(-tau * in->obs(d)); };
    if (want) lin.theta = -tau * in->theta;
    return lin;
  }

 private:
  AtomPtr inner_;
};

}  // namespace

AtomPtr make_zero_atom(Index dim) { return std::make_shared<ZeroAtom>(dim); }

AtomPtr make_l1_atom(Index dim, Index theta_index, Index begin, Index end) {
  if (end < 0) end = dim;
  if (begin < 0 || begin > end || end > dim) throw ConfigError("ℓ1 atom range outside its domain");
  return std::make_shared<L1Atom>(dim, theta_index, begin, end);
}

AtomPtr make_block_l1_atom(Index dim, Index theta_index, Index begin, Index nblocks, Index D) {
  if (begin < 0 || nblocks <= 0 || D <= 0 || begin + nblocks * D > dim)
    throw ConfigError("block ℓ1 atom range outside its domain");
  return std::make_shared<BlockL1Atom>(dim, theta_index, begin, nblocks, D);
}

AtomPtr make_multiscale_l1_atom(Index band_size, std::vector<Index> theta_index) {
  if (band_size <= 0 || theta_index.empty()) throw ConfigError("multiscale atom needs bands");
  return std::make_shared<MultiscaleL1Atom>(band_size, std::move(theta_index));
}

AtomPtr make_nuclear_atom(Index n1, Index n2, Index theta_index) {
  if (n1 <= 0 || n2 <= 0) throw ConfigError("nuclear atom needs a positive shape");
  return std::make_shared<NuclearAtom>(n1, n2, theta_index);
}

AtomPtr make_quadratic_data_atom(std::shared_ptr<const GramSolver> gram) {
  return std::make_shared<QuadraticDataAtom>(std::move(gram));
}

AtomPtr make_tv_constraint_atom(Index n1, Index n2) { return std::make_shared<TvConstraintAtom>(n1, n2); }

AtomPtr make_conjugate_atom(AtomPtr inner) { return std::make_shared<ConjugateAtom>(std::move(inner)); }

}  // namespace sugar
