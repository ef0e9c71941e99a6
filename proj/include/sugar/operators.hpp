#pragma once

#include "sugar/core.hpp"

#include <complex>
#include <functional>
#include <memory>
#include <vector>

namespace sugar {

using ScalarFn = std::function<double(double)>;

// Functional calculus of ΦΦ* in a basis that diagonalizes it.
class GramSpectrum {
 public:
  virtual ~GramSpectrum() = default;
  virtual Index dim() const = 0;
  virtual Vec apply(const ScalarFn& f, const Vec& v) const = 0;  // f(ΦΦ*) v
  virtual double trace(const ScalarFn& f) const = 0;
  virtual double max_eigenvalue() const = 0;
  virtual Index count_above(double tol) const = 0;
  virtual bool is_identity() const { return false; }
};

using SpectrumPtr = std::shared_ptr<const GramSpectrum>;

class LinearMap {
 public:
  virtual ~LinearMap() = default;
  virtual Index in_dim() const = 0;
  virtual Index out_dim() const = 0;
  virtual Vec apply(const Vec& x) const = 0;
  virtual Vec adjoint(const Vec& y) const = 0;
  virtual double norm_bound() const = 0;
  virtual SpectrumPtr gram_spectrum() const { return nullptr; }
};

using MapPtr = std::shared_ptr<const LinearMap>;

enum class IndexBase { Zero, One };

MapPtr make_identity(Index n);
MapPtr make_dense(const Mat& m);
MapPtr make_mask(Index n, const std::vector<Index>& pattern, IndexBase base = IndexBase::One);
MapPtr compose(MapPtr outer, MapPtr inner);

// Images are n1×n2 stored column-major: pixel (i, j) sits at i + n1*j.
// Spectra use the same layout over frequency indices (k1, k2).
using Spectrum = std::vector<std::complex<double>>;

Mat gaussian_kernel(Index n1, Index n2, double stddev, int radius);
Mat lowpass_frequency_mask(Index n1, Index n2, double keep_fraction);
Spectrum kernel_spectrum(const Mat& kernel);
Spectrum random_phase_spectrum(Index n1, Index n2, Rng& rng);

MapPtr make_periodic_convolution(const Mat& kernel, const Mat& freq_mask);
MapPtr make_periodic_convolution(Index n1, Index n2, Spectrum spectrum);

// Forward differences, Neumann boundary. Output is planar: [horizontal; vertical],
// horizontal meaning differences along the column index j.
MapPtr make_discrete_gradient(Index n1, Index n2);
Vec divergence(const LinearMap& grad, const Vec& field);

// J-scale à-trous Daubechies-4 analysis. Output bands [h_1, v_1, ..., h_J, v_J], each n1*n2.
MapPtr make_undecimated_wavelet(Index n1, Index n2, int J);
std::vector<double> daubechies4_lowpass();
std::vector<double> daubechies4_highpass();

// Solves involving ΦΦ*: exact spectral calculus when the map provides one,
// dense eigendecomposition up to dense_limit, conjugate gradient beyond.
class GramSolver {
 public:
  explicit GramSolver(MapPtr phi, Index dense_limit = 4096, double cg_tol = 1e-10);

  Vec resolvent(double xi, const Vec& v) const;  // (Id + ξΦΦ*)^{-1} v
  Vec pinv(const Vec& v) const;                   // (ΦΦ*)^+ v
  Vec project(const Vec& x) const;                // Φ*(ΦΦ*)^+Φ x
  bool has_spectrum() const { return spectrum_ != nullptr; }
  double pinv_trace() const;  // needs a spectrum
  Index rank() const;         // needs a spectrum
  const LinearMap& phi() const { return *phi_; }
  const MapPtr& phi_ptr() const { return phi_; }

  static constexpr double kPinvTol = 1e-10;

 private:
  Vec cg(const std::function<Vec(const Vec&)>& op, const Vec& b) const;

  MapPtr phi_;
  SpectrumPtr spectrum_;
  double cg_tol_;
};

enum class RiskMode { Prediction, Projection, Estimation };

RiskMode parse_risk_mode(const std::string& s);
std::string to_string(RiskMode m);

struct TraceOptions {
  enum class Method { Auto, Exact, Hutchinson };
  Method method = Method::Auto;
  int probes = 128;
  std::uint64_t seed = 0;
};

class RiskWeight {
 public:
  RiskWeight(RiskMode mode, Index dim, std::function<Vec(const Vec&)> apply, double trace);

  RiskMode mode() const { return mode_; }
  Index dim() const { return dim_; }
  Vec apply_AtA(const Vec& v) const { return apply_(v); }
  double trace_AtA() const { return trace_; }

 private:
  RiskMode mode_;
  Index dim_;
  std::function<Vec(const Vec&)> apply_;
  double trace_;
};

RiskWeight make_risk_weight(RiskMode mode, MapPtr phi, const TraceOptions& opts = {});

double hutchinson_trace(const std::function<Vec(const Vec&)>& op, Index dim, int probes, Rng& rng);

}  // namespace sugar
