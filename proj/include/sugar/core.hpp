#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace sugar {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Counter-based SplitMix64. A (seed, stream) pair names an independent sequence.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }
  result_type operator()();

  double uniform();  // [0, 1)
  double normal();
  Vec normal_vec(Index n);
  Vec rademacher(Index n);
  Index below(Index n);  // uniform integer in [0, n)

  static constexpr const char* name() { return "splitmix64-counter"; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> gauss_;
};

std::uint64_t splitmix64(std::uint64_t x);

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace sugar
