#pragma once

#include "sugar/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sugar {

struct OracleReport {
  std::string name;
  double reference = 0;
  double value = 0;
  double abs_error = 0;
  double rel_error = 0;
  double tolerance = 0;
  bool pass = false;
  std::string to_json() const;
};

// pass ⇔ |value - reference| ≤ tolerance.
OracleReport compare(std::string name, double value, double reference, double tolerance);

// Central differences, one column per coordinate of θ.
Mat fd_jacobian_oracle(const std::function<Vec(const Vec&)>& map, const Vec& theta, double step);

struct McEstimate {
  double mean;
  double se;
  int replicates;
  bool within(double target, double n_se = 3) const;
};

// statistic(rng, replicate) draws its own sample from the given stream.
McEstimate mc_expectation_oracle(const std::function<double(Rng&, int)>& statistic, int replicates,
                                 std::uint64_t seed);

struct GridResult {
  double best;
  double best_value;
  std::vector<double> grid;
  std::vector<double> values;
};

std::vector<double> log_grid(double lo, double hi, int points);
GridResult grid_search_oracle(const std::function<double(double)>& objective, double lo, double hi, int points);

// tr(M) by applying M to every canonical basis vector.
double direct_trace(const std::function<Vec(const Vec&)>& op, Index dim);

}  // namespace sugar
