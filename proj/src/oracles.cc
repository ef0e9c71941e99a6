#include "sugar/oracles.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace sugar {

std::string OracleReport::to_json() const {
  nlohmann::json j{{"name", name},           {"reference", reference}, {"value", value},
                   {"abs_error", abs_error}, {"rel_error", rel_error}, {"tolerance", tolerance},
                   {"pass", pass}};
  return j.dump();
}

OracleReport compare(std::string name, double value, double reference, double tolerance) {
  OracleReport r;
  r.name = std::move(name);
  r.value = value;
  r.reference = reference;
  r.abs_error = std::abs(value - reference);
  r.rel_error = reference != 0 ? r.abs_error / std::abs(reference) : r.abs_error;
  r.tolerance = tolerance;
  r.pass = r.abs_error <= tolerance;
  return r;
}

Mat fd_jacobian_oracle(const std::function<Vec(const Vec&)>& map, const Vec& theta, double step) {
  if (!(step > 0)) throw ConfigError("fd step must be positive");
  Mat J;
  for (Index k = 0; k < theta.size(); ++k) {
    Vec tp = theta, tm = theta;
    tp[k] += step;
    tm[k] -= step;
    const Vec col = (map(tp) - map(tm)) / (2 * step);
    if (k == 0) J.resize(col.size(), theta.size());
    J.col(k) = col;
  }
  return J;
}

bool McEstimate::within(double target, double n_se) const { return std::abs(mean - target) <= n_se * se; }

McEstimate mc_expectation_oracle(const std::function<double(Rng&, int)>& statistic, int replicates,
                                 std::uint64_t seed) {
  if (replicates < 100) throw ConfigError("Monte-Carlo oracle needs at least 100 replicates");
  double mean = 0, m2 = 0;
  for (int r = 0; r < replicates; ++r) {
    Rng rng(seed, std::uint64_t(r));
    const double v = statistic(rng, r);
    const double d = v - mean;
    mean += d / (r + 1);
    m2 += d * (v - mean);
  }
  return {mean, std::sqrt(m2 / (replicates - 1) / replicates), replicates};
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0) || !(hi > lo) || points < 2) throw ConfigError("log grid needs 0 < lo < hi and two points");
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = lo * std::pow(hi / lo, double(i) / (points - 1));
  return g;
}

GridResult grid_search_oracle(const std::function<double(double)>& objective, double lo, double hi, int points) {
  if (points < 10) throw ConfigError("grid search needs at least 10 points");
  GridResult r;
  r.grid = log_grid(lo, hi, points);
  r.best = r.grid.front();
  r.best_value = std::numeric_limits<double>::infinity();
  for (double l : r.grid) {
    const double v = objective(l);
    r.values.push_back(v);
    if (v < r.best_value) {
      r.best_value = v;
      r.best = l;
    }
  }
  return r;
}

double direct_trace(const std::function<Vec(const Vec&)>& op, Index dim) {
  double t = 0;
  Vec e = Vec::Zero(dim);
  for (Index i = 0; i < dim; ++i) {
    e[i] = 1;
    t += op(e)[i];
    e[i] = 0;
  }
  return t;
}

}  // namespace sugar
