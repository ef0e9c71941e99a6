#include "sugar/operators.hpp"

#include "fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sugar {

namespace detail {

namespace {

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {}
  ~FftwBuffer() { fftw_free(data); }
  fftw_complex* data;
};

struct FftwRealBuffer {
  explicit FftwRealBuffer(std::size_t n) : data(fftw_alloc_real(n)) {}
  ~FftwRealBuffer() { fftw_free(data); }
  double* data;
};

}  // namespace

Fft2::Fft2(Index n1, Index n2) : n1_(n1), n2_(n2) {
  FftwBuffer a(n1 * n2), b(n1 * n2);
  fwd_ = fftw_plan_dft_2d(int(n2), int(n1), a.data, b.data, FFTW_FORWARD, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_2d(int(n2), int(n1), a.data, b.data, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!fwd_ || !bwd_) throw NumericalError("FFTW plan creation failed");
}

Fft2::~Fft2() {
  if (fwd_) fftw_destroy_plan(fwd_);
  if (bwd_) fftw_destroy_plan(bwd_);
}

std::vector<std::complex<double>> Fft2::forward(const Vec& x) const {
  const Index n = n1_ * n2_;
  FftwBuffer a(n), b(n);
  for (Index i = 0; i < n; ++i) {
    a.data[i][0] = x[i];
    a.data[i][1] = 0.0;
  }
  fftw_execute_dft(fwd_, a.data, b.data);
  std::vector<std::complex<double>> out(n);
  for (Index i = 0; i < n; ++i) out[i] = {b.data[i][0], b.data[i][1]};
  return out;
}

Vec Fft2::filter(const Vec& x, const std::vector<std::complex<double>>& w, bool conjugate) const {
  const Index n = n1_ * n2_;
  FftwBuffer a(n), b(n);
  for (Index i = 0; i < n; ++i) {
    a.data[i][0] = x[i];
    a.data[i][1] = 0.0;
  }
  fftw_execute_dft(fwd_, a.data, b.data);
  for (Index i = 0; i < n; ++i) {
    std::complex<double> c(b.data[i][0], b.data[i][1]);
    c *= conjugate ? std::conj(w[i]) : w[i];
    b.data[i][0] = c.real();
    b.data[i][1] = c.imag();
  }
  fftw_execute_dft(bwd_, b.data, a.data);
  Vec out(n);
  const double scale = 1.0 / double(n);
  for (Index i = 0; i < n; ++i) out[i] = a.data[i][0] * scale;
  return out;
}

Vec Fft2::filter_real(const Vec& x, const std::vector<double>& w) const {
  const Index n = n1_ * n2_;
  FftwBuffer a(n), b(n);
  for (Index i = 0; i < n; ++i) {
    a.data[i][0] = x[i];
    a.data[i][1] = 0.0;
  }
  fftw_execute_dft(fwd_, a.data, b.data);
  for (Index i = 0; i < n; ++i) {
    b.data[i][0] *= w[i];
    b.data[i][1] *= w[i];
  }
  fftw_execute_dft(bwd_, b.data, a.data);
  Vec out(n);
  const double scale = 1.0 / double(n);
  for (Index i = 0; i < n; ++i) out[i] = a.data[i][0] * scale;
  return out;
}

NeumannPoisson::NeumannPoisson(Index n1, Index n2) : n1_(n1), n2_(n2), inv_eig_(n1 * n2) {
  FftwRealBuffer a(n1 * n2), b(n1 * n2);
  dct_ = fftw_plan_r2r_2d(int(n2), int(n1), a.data, b.data, FFTW_REDFT10, FFTW_REDFT10, FFTW_ESTIMATE);
  idct_ = fftw_plan_r2r_2d(int(n2), int(n1), a.data, b.data, FFTW_REDFT01, FFTW_REDFT01, FFTW_ESTIMATE);
  if (!dct_ || !idct_) throw NumericalError("FFTW plan creation failed");
  const double norm = 1.0 / (4.0 * double(n1) * double(n2));
  for (Index j = 0; j < n2; ++j)
    for (Index i = 0; i < n1; ++i) {
      const double s1 = std::sin(std::numbers::pi * double(i) / (2.0 * double(n1)));
      const double s2 = std::sin(std::numbers::pi * double(j) / (2.0 * double(n2)));
      inv_eig_[i + n1 * j] = norm / (1.0 + 4.0 * s1 * s1 + 4.0 * s2 * s2);
    }
}

NeumannPoisson::~NeumannPoisson() {
  if (dct_) fftw_destroy_plan(dct_);
  if (idct_) fftw_destroy_plan(idct_);
}

Vec NeumannPoisson::solve(const Vec& rhs) const {
  const Index n = n1_ * n2_;
  FftwRealBuffer a(n), b(n);
  std::copy(rhs.data(), rhs.data() + n, a.data);
  fftw_execute_r2r(dct_, a.data, b.data);
  for (Index i = 0; i < n; ++i) b.data[i] *= inv_eig_[i];
  fftw_execute_r2r(idct_, b.data, a.data);
  return Eigen::Map<const Vec>(a.data, n);
}

}  // namespace detail

namespace {

class IdentityGram final : public GramSpectrum {
 public:
  explicit IdentityGram(Index n) : n_(n) {}
  Index dim() const override { return n_; }
  Vec apply(const ScalarFn& f, const Vec& v) const override { return f(1.0) * v; }
  double trace(const ScalarFn& f) const override { return double(n_) * f(1.0); }
  double max_eigenvalue() const override { return 1.0; }
  Index count_above(double tol) const override { return tol < 1.0 ? n_ : 0; }
  bool is_identity() const override { return true; }

 private:
  Index n_;
};

class DenseGram final : public GramSpectrum {
 public:
  explicit DenseGram(const Mat& gram) {
    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of ΦΦ* failed");
    q_ = es.eigenvectors();
    eig_ = es.eigenvalues().cwiseMax(0.0);
  }
  Index dim() const override { return eig_.size(); }
  Vec apply(const ScalarFn& f, const Vec& v) const override {
    Vec c = q_.transpose() * v;
    for (Index i = 0; i < c.size(); ++i) c[i] *= f(eig_[i]);
    return q_ * c;
  }
  double trace(const ScalarFn& f) const override {
    double t = 0;
    for (Index i = 0; i < eig_.size(); ++i) t += f(eig_[i]);
    return t;
  }
  double max_eigenvalue() const override { return eig_.size() ? eig_.maxCoeff() : 0.0; }
  Index count_above(double tol) const override { return (eig_.array() > tol).count(); }

 private:
  Mat q_;
  Vec eig_;
};

class FourierGram final : public GramSpectrum {
 public:
  FourierGram(std::shared_ptr<const detail::Fft2> fft, std::vector<double> eig)
      : fft_(std::move(fft)), eig_(std::move(eig)) {}
  Index dim() const override { return Index(eig_.size()); }
  Vec apply(const ScalarFn& f, const Vec& v) const override {
    std::vector<double> w(eig_.size());
    std::transform(eig_.begin(), eig_.end(), w.begin(), f);
    return fft_->filter_real(v, w);
  }
  double trace(const ScalarFn& f) const override {
    double t = 0;
    for (double e : eig_) t += f(e);
    return t;
  }
  double max_eigenvalue() const override { return *std::max_element(eig_.begin(), eig_.end()); }
  Index count_above(double tol) const override {
    return std::count_if(eig_.begin(), eig_.end(), [tol](double e) { return e > tol; });
  }
  bool is_identity() const override {
    return std::all_of(eig_.begin(), eig_.end(), [](double e) { return std::abs(e - 1.0) < 1e-12; });
  }

 private:
  std::shared_ptr<const detail::Fft2> fft_;
  std::vector<double> eig_;
};

class IdentityMap final : public LinearMap {
 public:
  explicit IdentityMap(Index n) : n_(n) {}
  Index in_dim() const override { return n_; }
  Index out_dim() const override { return n_; }
  Vec apply(const Vec& x) const override { return x; }
  Vec adjoint(const Vec& y) const override { return y; }
  double norm_bound() const override { return 1.0; }
  SpectrumPtr gram_spectrum() const override { return std::make_shared<IdentityGram>(n_); }

 private:
  Index n_;
};

class DenseMap final : public LinearMap {
 public:
  explicit DenseMap(Mat m) : m_(std::move(m)) {
    norm_ = m_.size() ? Eigen::JacobiSVD<Mat>(m_).singularValues()[0] : 0.0;
  }
  Index in_dim() const override { return m_.cols(); }
  Index out_dim() const override { return m_.rows(); }
  Vec apply(const Vec& x) const override { return m_ * x; }
  Vec adjoint(const Vec& y) const override { return m_.transpose() * y; }
  double norm_bound() const override { return norm_; }

 private:
  Mat m_;
  double norm_;
};

class MaskMap final : public LinearMap {
 public:
  MaskMap(Index n, std::vector<Index> idx) : n_(n), idx_(std::move(idx)) {}
  Index in_dim() const override { return n_; }
  Index out_dim() const override { return Index(idx_.size()); }
  Vec apply(const Vec& x) const override {
    Vec y(idx_.size());
    for (std::size_t i = 0; i < idx_.size(); ++i) y[Index(i)] = x[idx_[i]];
    return y;
  }
  Vec adjoint(const Vec& y) const override {
    Vec x = Vec::Zero(n_);
    for (std::size_t i = 0; i < idx_.size(); ++i) x[idx_[i]] = y[Index(i)];
    return x;
  }
  double norm_bound() const override { return idx_.empty() ? 0.0 : 1.0; }
  SpectrumPtr gram_spectrum() const override {
    return std::make_shared<IdentityGram>(Index(idx_.size()));
  }

 private:
  Index n_;
  std::vector<Index> idx_;
};

class Composition final : public LinearMap {
 public:
  Composition(MapPtr outer, MapPtr inner) : outer_(std::move(outer)), inner_(std::move(inner)) {}
  Index in_dim() const override { return inner_->in_dim(); }
  Index out_dim() const override { return outer_->out_dim(); }
  Vec apply(const Vec& x) const override { return outer_->apply(inner_->apply(x)); }
  Vec adjoint(const Vec& y) const override { return inner_->adjoint(outer_->adjoint(y)); }
  double norm_bound() const override { return outer_->norm_bound() * inner_->norm_bound(); }
  SpectrumPtr gram_spectrum() const override {
    // (ST)(ST)* = S S* whenever T T* = Id.
    auto si = inner_->gram_spectrum();
    if (!si || !si->is_identity()) return nullptr;
    return outer_->gram_spectrum();
  }

 private:
  MapPtr outer_, inner_;
};

class PeriodicConvolution final : public LinearMap {
 public:
  PeriodicConvolution(Index n1, Index n2, Spectrum s)
      : n1_(n1), n2_(n2), s_(std::move(s)), fft_(std::make_shared<detail::Fft2>(n1, n2)) {
    std::vector<double> eig(s_.size());
    for (std::size_t i = 0; i < s_.size(); ++i) eig[i] = std::norm(s_[i]);
    norm_ = std::sqrt(*std::max_element(eig.begin(), eig.end()));
    gram_ = std::make_shared<FourierGram>(fft_, std::move(eig));
  }
  Index in_dim() const override { return n1_ * n2_; }
  Index out_dim() const override { return n1_ * n2_; }
  Vec apply(const Vec& x) const override { return fft_->filter(x, s_, false); }
  Vec adjoint(const Vec& y) const override { return fft_->filter(y, s_, true); }
  double norm_bound() const override { return norm_; }
  SpectrumPtr gram_spectrum() const override { return gram_; }

 private:
  Index n1_, n2_;
  Spectrum s_;
  std::shared_ptr<const detail::Fft2> fft_;
  SpectrumPtr gram_;
  double norm_;
};

class DiscreteGradient final : public LinearMap {
 public:
  DiscreteGradient(Index n1, Index n2) : n1_(n1), n2_(n2) {}
  Index in_dim() const override { return n1_ * n2_; }
  Index out_dim() const override { return 2 * n1_ * n2_; }
  Vec apply(const Vec& x) const override {
    const Index n = n1_ * n2_;
    Vec t = Vec::Zero(2 * n);
    for (Index j = 0; j < n2_; ++j)
      for (Index i = 0; i < n1_; ++i) {
        const Index p = i + n1_ * j;
        if (j + 1 < n2_) t[p] = x[p + n1_] - x[p];
        if (i + 1 < n1_) t[n + p] = x[p + 1] - x[p];
      }
    return t;
  }
  Vec adjoint(const Vec& t) const override {
    const Index n = n1_ * n2_;
    Vec x = Vec::Zero(n);
    for (Index j = 0; j < n2_; ++j)
      for (Index i = 0; i < n1_; ++i) {
        const Index p = i + n1_ * j;
        if (j + 1 < n2_) {
          x[p + n1_] += t[p];
          x[p] -= t[p];
        }
        if (i + 1 < n1_) {
          x[p + 1] += t[n + p];
          x[p] -= t[n + p];
        }
      }
    return x;
  }
  double norm_bound() const override { return std::sqrt(8.0); }

 private:
  Index n1_, n2_;
};

// Periodic dilated filtering along one image axis.
Vec axis_filter(const Vec& x, Index n1, Index n2, const std::vector<double>& f, Index dilation,
                bool along_columns, bool transpose) {
  Vec out = Vec::Zero(x.size());
  const Index len = along_columns ? n2 : n1;
  const Index sign = transpose ? 1 : -1;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Index shift = ((sign * Index(k) * dilation) % len + len) % len;
    for (Index j = 0; j < n2; ++j)
      for (Index i = 0; i < n1; ++i) {
        const Index src = along_columns ? i + n1 * ((j + shift) % len) : (i + shift) % len + n1 * j;
        out[i + n1 * j] += f[k] * x[src];
      }
  }
  return out;
}

class UndecimatedWavelet final : public LinearMap {
 public:
  UndecimatedWavelet(Index n1, Index n2, int J)
      : n1_(n1), n2_(n2), J_(J), h_(daubechies4_lowpass()), g_(daubechies4_highpass()) {
    norm_ = compute_norm();
  }
  Index in_dim() const override { return n1_ * n2_; }
  Index out_dim() const override { return 2 * J_ * n1_ * n2_; }

  Vec apply(const Vec& x) const override {
    const Index n = n1_ * n2_;
    Vec out(2 * J_ * n);
    Vec a = x;
    for (int j = 0; j < J_; ++j) {
      const Index s = Index(1) << j;
      out.segment(2 * j * n, n) = axis_filter(a, n1_, n2_, g_, s, true, false);
      out.segment((2 * j + 1) * n, n) = axis_filter(a, n1_, n2_, g_, s, false, false);
      if (j + 1 < J_) a = axis_filter(axis_filter(a, n1_, n2_, h_, s, true, false), n1_, n2_, h_, s, false, false);
    }
    return out;
  }

  Vec adjoint(const Vec& u) const override {
    const Index n = n1_ * n2_;
    Vec r = Vec::Zero(n);
    for (int j = J_ - 1; j >= 0; --j) {
      const Index s = Index(1) << j;
      if (j + 1 < J_)
        r = axis_filter(axis_filter(r, n1_, n2_, h_, s, false, true), n1_, n2_, h_, s, true, true);
      r += axis_filter(u.segment(2 * j * n, n), n1_, n2_, g_, s, true, true);
      r += axis_filter(u.segment((2 * j + 1) * n, n), n1_, n2_, g_, s, false, true);
    }
    return r;
  }

  double norm_bound() const override { return norm_; }

 private:
  static double response2(const std::vector<double>& f, double w) {
    std::complex<double> acc = 0;
    for (std::size_t k = 0; k < f.size(); ++k) acc += f[k] * std::polar(1.0, -w * double(k));
    return std::norm(acc);
  }

  // Exact sup of the Ψ*Ψ symbol over the DFT grid.
  double compute_norm() const {
    double best = 0;
    for (Index k2 = 0; k2 < n2_; ++k2)
      for (Index k1 = 0; k1 < n1_; ++k1) {
        const double w1 = 2 * std::numbers::pi * double(k1) / double(n1_);
        const double w2 = 2 * std::numbers::pi * double(k2) / double(n2_);
        double low = 1, sym = 0;
        for (int j = 0; j < J_; ++j) {
          const double s = double(Index(1) << j);
          sym += low * (response2(g_, s * w1) + response2(g_, s * w2));
          low *= response2(h_, s * w1) * response2(h_, s * w2);
        }
        best = std::max(best, sym);
      }
    return std::sqrt(best);
  }

  Index n1_, n2_;
  int J_;
  std::vector<double> h_, g_;
  double norm_;
};

}  // namespace

MapPtr make_identity(Index n) {
  if (n <= 0) throw ConfigError("identity map needs a positive dimension");
  return std::make_shared<IdentityMap>(n);
}

MapPtr make_dense(const Mat& m) { return std::make_shared<DenseMap>(m); }

MapPtr make_mask(Index n, const std::vector<Index>& pattern, IndexBase base) {
  if (n <= 0) throw ConfigError("mask needs a positive ambient dimension");
  const Index offset = base == IndexBase::One ? 1 : 0;
  std::vector<Index> idx;
  idx.reserve(pattern.size());
  std::vector<char> seen(n, 0);
  for (Index p : pattern) {
    const Index i = p - offset;
    if (i < 0 || i >= n) {
      std::ostringstream os;
      os << "mask index " << p << " outside [" << offset << ", " << n - 1 + offset << "]";
      throw ConfigError(os.str());
    }
    if (seen[i]) throw ConfigError("duplicate mask index " + std::to_string(p));
    seen[i] = 1;
    idx.push_back(i);
  }
  return std::make_shared<MaskMap>(n, std::move(idx));
}

MapPtr compose(MapPtr outer, MapPtr inner) {
  if (outer->in_dim() != inner->out_dim()) throw ConfigError("composition dimension mismatch");
  return std::make_shared<Composition>(std::move(outer), std::move(inner));
}

Mat gaussian_kernel(Index n1, Index n2, double stddev, int radius) {
  if (stddev <= 0 || radius < 0 || 2 * radius + 1 > std::min(n1, n2))
    throw ConfigError("invalid Gaussian kernel parameters");
  Mat k = Mat::Zero(n1, n2);
  for (int di = -radius; di <= radius; ++di)
    for (int dj = -radius; dj <= radius; ++dj)
      k((di + n1) % n1, (dj + n2) % n2) = std::exp(-(di * di + dj * dj) / (2 * stddev * stddev));
  return k / k.sum();
}

Mat lowpass_frequency_mask(Index n1, Index n2, double keep_fraction) {
  if (!(keep_fraction > 0 && keep_fraction <= 1)) throw ConfigError("keep fraction must lie in (0, 1]");
  auto wrapped = [](Index k, Index n) {
    const double f = double(k) / double(n);
    return f >= 0.5 ? f - 1.0 : f;
  };
  Mat r(n1, n2);
  for (Index j = 0; j < n2; ++j)
    for (Index i = 0; i < n1; ++i) r(i, j) = std::hypot(wrapped(i, n1), wrapped(j, n2));
  std::vector<double> sorted(r.data(), r.data() + r.size());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t cut = std::max<std::size_t>(1, std::size_t(std::ceil(keep_fraction * double(sorted.size()))));
  const double thr = sorted[cut - 1] + 1e-12;
  Mat m(n1, n2);
  for (Index p = 0; p < r.size(); ++p) m.data()[p] = r.data()[p] <= thr ? 1.0 : 0.0;
  return m;
}

Spectrum kernel_spectrum(const Mat& kernel) {
  detail::Fft2 fft(kernel.rows(), kernel.cols());
  return fft.forward(Eigen::Map<const Vec>(kernel.data(), kernel.size()));
}

Spectrum random_phase_spectrum(Index n1, Index n2, Rng& rng) {
  Spectrum s(n1 * n2);
  std::vector<char> done(n1 * n2, 0);
  for (Index j = 0; j < n2; ++j)
    for (Index i = 0; i < n1; ++i) {
      const Index p = i + n1 * j;
      if (done[p]) continue;
      const Index q = (n1 - i) % n1 + n1 * ((n2 - j) % n2);
      if (p == q) {
        s[p] = rng.uniform() < 0.5 ? 1.0 : -1.0;
      } else {
        s[p] = std::polar(1.0, 2 * std::numbers::pi * rng.uniform());
        s[q] = std::conj(s[p]);
        done[q] = 1;
      }
      done[p] = 1;
    }
  return s;
}

MapPtr make_periodic_convolution(const Mat& kernel, const Mat& freq_mask) {
  if (kernel.rows() != freq_mask.rows() || kernel.cols() != freq_mask.cols())
    throw ConfigError("kernel and frequency mask sizes differ");
  Spectrum s = kernel_spectrum(kernel);
  for (Index p = 0; p < freq_mask.size(); ++p)
    if (freq_mask.data()[p] == 0.0) s[p] = 0.0;
  return std::make_shared<PeriodicConvolution>(kernel.rows(), kernel.cols(), std::move(s));
}

MapPtr make_periodic_convolution(Index n1, Index n2, Spectrum spectrum) {
  if (Index(spectrum.size()) != n1 * n2) throw ConfigError("spectrum size does not match the image grid");
  return std::make_shared<PeriodicConvolution>(n1, n2, std::move(spectrum));
}

MapPtr make_discrete_gradient(Index n1, Index n2) {
  if (n1 < 2 || n2 < 2) throw ConfigError("gradient needs at least a 2x2 grid");
  return std::make_shared<DiscreteGradient>(n1, n2);
}

Vec divergence(const LinearMap& grad, const Vec& field) { return -grad.adjoint(field); }

std::vector<double> daubechies4_lowpass() {
  const double r3 = std::sqrt(3.0);
  return {(1 + r3) / 8, (3 + r3) / 8, (3 - r3) / 8, (1 - r3) / 8};
}

std::vector<double> daubechies4_highpass() {
  const auto h = daubechies4_lowpass();
  return {h[3], -h[2], h[1], -h[0]};
}

MapPtr make_undecimated_wavelet(Index n1, Index n2, int J) {
  if (J < 1) throw ConfigError("wavelet needs J >= 1");
  const Index need = 4 * (Index(1) << (J - 1));
  if (n1 < need || n2 < need)
    throw ConfigError("image " + std::to_string(n1) + "x" + std::to_string(n2) + " too small for " +
                      std::to_string(J) + " scales (need sides >= " + std::to_string(need) + ")");
  return std::make_shared<UndecimatedWavelet>(n1, n2, J);
}

GramSolver::GramSolver(MapPtr phi, Index dense_limit, double cg_tol)
    : phi_(std::move(phi)), spectrum_(phi_->gram_spectrum()), cg_tol_(cg_tol) {
  if (!spectrum_ && phi_->out_dim() <= dense_limit) {
    const Index p = phi_->out_dim();
    Mat g(p, p);
    for (Index i = 0; i < p; ++i) g.col(i) = phi_->apply(phi_->adjoint(Vec::Unit(p, i)));
    spectrum_ = std::make_shared<DenseGram>(0.5 * (g + g.transpose()));
  }
}

Vec GramSolver::cg(const std::function<Vec(const Vec&)>& op, const Vec& b) const {
  Vec x = Vec::Zero(b.size());
  Vec r = b, p = r;
  double rr = r.squaredNorm();
  const double stop = cg_tol_ * cg_tol_ * std::max(rr, 1e-300);
  const Index max_iter = std::max<Index>(10 * b.size(), 100);
  for (Index it = 0; it < max_iter; ++it) {
    if (rr <= stop) return x;
    const Vec ap = op(p);
    const double alpha = rr / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  if (rr <= stop) return x;
  throw NumericalError("conjugate gradient did not reach tolerance " + std::to_string(cg_tol_));
}

Vec GramSolver::resolvent(double xi, const Vec& v) const {
  if (spectrum_) return spectrum_->apply([xi](double s) { return 1.0 / (1.0 + xi * s); }, v);
  return cg([&](const Vec& w) { return Vec(w + xi * phi_->apply(phi_->adjoint(w))); }, v);
}

Vec GramSolver::pinv(const Vec& v) const {
  if (spectrum_) {
    const double tol = kPinvTol * spectrum_->max_eigenvalue();
    return spectrum_->apply([tol](double s) { return s > tol ? 1.0 / s : 0.0; }, v);
  }
  return cg([&](const Vec& w) { return phi_->apply(phi_->adjoint(w)); }, v);
}

Vec GramSolver::project(const Vec& x) const { return phi_->adjoint(pinv(phi_->apply(x))); }

double GramSolver::pinv_trace() const {
  if (!spectrum_) throw ConfigError("exact trace needs a diagonalizable ΦΦ*");
  const double tol = kPinvTol * spectrum_->max_eigenvalue();
  return spectrum_->trace([tol](double s) { return s > tol ? 1.0 / s : 0.0; });
}

Index GramSolver::rank() const {
  if (!spectrum_) throw ConfigError("rank needs a diagonalizable ΦΦ*");
  return spectrum_->count_above(kPinvTol * spectrum_->max_eigenvalue());
}

RiskMode parse_risk_mode(const std::string& s) {
  if (s == "prediction") return RiskMode::Prediction;
  if (s == "projection") return RiskMode::Projection;
  if (s == "estimation") return RiskMode::Estimation;
  throw ConfigError("unknown risk mode '" + s + "' (prediction, projection, estimation)");
}

std::string to_string(RiskMode m) {
  switch (m) {
    case RiskMode::Prediction: return "prediction";
    case RiskMode::Projection: return "projection";
    case RiskMode::Estimation: return "estimation";
  }
  return "?";
}

RiskWeight::RiskWeight(RiskMode mode, Index dim, std::function<Vec(const Vec&)> apply, double trace)
    : mode_(mode), dim_(dim), apply_(std::move(apply)), trace_(trace) {}

double hutchinson_trace(const std::function<Vec(const Vec&)>& op, Index dim, int probes, Rng& rng) {
  if (probes < 1) throw ConfigError("Hutchinson needs at least one probe");
  double acc = 0;
  for (int k = 0; k < probes; ++k) {
    const Vec z = rng.rademacher(dim);
    acc += z.dot(op(z));
  }
  return acc / probes;
}

RiskWeight make_risk_weight(RiskMode mode, MapPtr phi, const TraceOptions& opts) {
  const Index p = phi->out_dim();
  if (mode == RiskMode::Prediction)
    return RiskWeight(mode, p, [](const Vec& v) { return v; }, double(p));

  auto solver = std::make_shared<GramSolver>(phi);
  if (mode == RiskMode::Estimation) {
    if (!solver->has_spectrum())
      throw ConfigError("estimation mode needs an operator with a diagonalizable ΦΦ*; use projection mode");
    if (solver->rank() < phi->in_dim())
      throw ConfigError("estimation risk needs Φ with full column rank (rank " + std::to_string(solver->rank()) +
                        " < " + std::to_string(phi->in_dim()) + "); use projection mode");
  }
  auto apply = [solver](const Vec& v) { return solver->pinv(v); };
  double trace;
  const bool exact_ok = solver->has_spectrum();
  using M = TraceOptions::Method;
  if (opts.method == M::Exact || (opts.method == M::Auto && exact_ok)) {
    trace = solver->pinv_trace();
  } else {
    Rng rng(opts.seed, 0x7ace);
    trace = hutchinson_trace(apply, p, std::max(opts.probes, 100), rng);
  }
  return RiskWeight(mode, p, apply, trace);
}

}  // namespace sugar
