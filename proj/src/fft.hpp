#pragma once

#include "sugar/core.hpp"

#include <fftw3.h>

#include <complex>
#include <functional>
#include <vector>

namespace sugar::detail {

// 2-D transforms on column-major n1×n2 images. FFTW sees them as row-major (n2, n1).
class Fft2 {
 public:
  Fft2(Index n1, Index n2);
  ~Fft2();
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  Index n1() const { return n1_; }
  Index n2() const { return n2_; }

  // Re(IFFT(w ⊙ FFT(x))), with w optionally conjugated.
  Vec filter(const Vec& x, const std::vector<std::complex<double>>& w, bool conjugate) const;
  Vec filter_real(const Vec& x, const std::vector<double>& w) const;
  std::vector<std::complex<double>> forward(const Vec& x) const;

 private:
  Index n1_, n2_;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

// Solves (Id + ∇*∇) f = b for Neumann forward differences through DCT-II.
class NeumannPoisson {
 public:
  NeumannPoisson(Index n1, Index n2);
  ~NeumannPoisson();
  NeumannPoisson(const NeumannPoisson&) = delete;
  NeumannPoisson& operator=(const NeumannPoisson&) = delete;

  Vec solve(const Vec& b) const;

 private:
  Index n1_, n2_;
  std::vector<double> inv_eig_;
  fftw_plan dct_ = nullptr;
  fftw_plan idct_ = nullptr;
};

}  // namespace sugar::detail
