#include "sugar/autotune.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace sugar {

void TuneConfig::validate() const {
  if (!(alpha_init > 0 && alpha_init < 1)) throw ConfigError("alpha_init must lie in (0, 1)");
  if (!(stop_ratio > 0 && stop_ratio < 1)) throw ConfigError("stop_ratio must lie in (0, 1)");
  if (max_outer_iters < 1) throw ConfigError("max_outer_iters must be positive");
  if (max_ls_failures < 1) throw ConfigError("max_ls_failures must be positive");
  if (max_evaluations < 0) throw ConfigError("max_evaluations must be nonnegative");
  if (!(c1 > 0 && c1 < c2 && c2 < 1)) throw ConfigError("line search needs 0 < c1 < c2 < 1");
}

Vec lambda_init(Index P, double sigma, const Vec& reg_values) {
  if (P < 1 || !(sigma > 0)) throw ConfigError("lambda_init needs P >= 1 and σ > 0");
  if (reg_values.size() == 0) throw ConfigError("no regularizer values");
  const double sum = reg_values.sum();
  if (!std::isfinite(sum)) throw NumericalError("regularizer values are not finite");
  if (sum <= 0) throw ConfigError("least-squares estimate has zero regularizer value; tuning is undefined");
  return Vec::Constant(reg_values.size(), double(P) * sigma * sigma / (4 * sum));
}

Vec b1_init(const Vec& lambda0, const Vec& grad0, double alpha) {
  if (lambda0.size() != grad0.size()) throw ConfigError("b1_init: size mismatch");
  Vec b(lambda0.size());
  double largest = 0;
  for (Index k = 0; k < b.size(); ++k) {
    b[k] = grad0[k] != 0 ? std::abs(alpha * lambda0[k] / grad0[k]) : 0;
    if (std::isfinite(b[k])) largest = std::max(largest, b[k]);
  }
  if (largest == 0) return Vec();
  for (Index k = 0; k < b.size(); ++k)
    if (b[k] == 0 || !std::isfinite(b[k])) b[k] = largest;
  return b;
}

namespace {

class Tracker {
 public:
  Tracker(const Objective& f, TuneResult& r, int budget) : f_(f), r_(r), budget_(budget) {}

  bool exhausted() const { return budget_ > 0 && r_.evaluations >= budget_; }

  Evaluation eval(const Vec& theta) {
    Evaluation e = f_(theta);
    if (e.grad.size() != theta.size()) throw NumericalError("objective returned a gradient of the wrong size");
    ++r_.evaluations;
    if (std::isfinite(e.sure) && (r_.theta.size() == 0 || e.sure < r_.sure)) {
      r_.theta = theta;
      r_.sure = e.sure;
      r_.grad = e.grad;
    }
    r_.trace.push_back({r_.evaluations, theta, e.sure, e.grad, false});
    return e;
  }

  void accept_last() { r_.trace.back().accepted = true; }

 private:
  const Objective& f_;
  TuneResult& r_;
  int budget_;
};

}  // namespace

TuneResult bfgs_minimize(const Objective& f, const Vec& lambda0, const TuneConfig& cfg) {
  cfg.validate();
  if (lambda0.size() == 0 || (lambda0.array() <= 0).any() || !all_finite(lambda0))
    throw ConfigError("initial parameters must be finite and positive");
  TuneResult res;
  Tracker tr(f, res, cfg.max_evaluations);

  Vec theta = lambda0;
  Evaluation cur = tr.eval(theta);
  tr.accept_last();
  if (!std::isfinite(cur.sure) || !all_finite(cur.grad)) throw NumericalError("objective is not finite at λ₀");
  const double g0 = cur.grad.lpNorm<Eigen::Infinity>();
  const Vec b1 = b1_init(lambda0, cur.grad, cfg.alpha_init);
  if (b1.size() == 0) {
    res.converged = true;
    return res;
  }
  const Index n = theta.size();
  Mat H = b1.asDiagonal();

  for (int it = 0; it < cfg.max_outer_iters; ++it) {
    if (cur.grad.lpNorm<Eigen::Infinity>() <= cfg.stop_ratio * g0) {
      res.converged = true;
      return res;
    }
    if (tr.exhausted()) {
      res.iteration_limit = true;
      return res;
    }
    Vec d = -H * cur.grad;
    double slope = cur.grad.dot(d);
    if (!(slope < 0)) {
      H = b1.asDiagonal();
      d = -H * cur.grad;
      slope = cur.grad.dot(d);
    }

    double t = 1, lo = 0, hi = std::numeric_limits<double>::infinity();
    int failures = 0;
    bool accepted = false;
    Vec trial;
    Evaluation next;
    while (failures < cfg.max_ls_failures && !tr.exhausted()) {
      trial = theta + t * d;
      if ((trial.array() <= 0).any()) {
        ++failures;
        hi = t;
        t *= 0.5;
        continue;
      }
      next = tr.eval(trial);
      const bool finite = std::isfinite(next.sure) && all_finite(next.grad);
      if (!finite || next.sure > cur.sure + cfg.c1 * t * slope) {
        hi = t;
      } else if (next.grad.dot(d) < cfg.c2 * slope) {
        lo = t;
      } else {
        accepted = true;
        break;
      }
      ++failures;
      t = std::isinf(hi) ? 2 * t : 0.5 * (lo + hi);
    }
    if (!accepted) {
      if (tr.exhausted())
        res.iteration_limit = true;
      else
        res.line_search_failed = true;
      return res;
    }
    tr.accept_last();

    const Vec s = trial - theta, yk = next.grad - cur.grad;
    const double sy = s.dot(yk);
    if (sy > 0) {
      const double rho = 1 / sy;
      const Mat I = Mat::Identity(n, n);
      H = (I - rho * s * yk.transpose()) * H * (I - rho * yk * s.transpose()) + rho * s * s.transpose();
    }
    theta = trial;
    cur = next;
  }
  if (cur.grad.lpNorm<Eigen::Infinity>() <= cfg.stop_ratio * g0)
    res.converged = true;
  else
    res.iteration_limit = true;
  return res;
}

std::vector<TuneResult> multi_start(const Objective& f, const Vec& lambda0, const TuneConfig& cfg,
                                    const std::vector<double>& factors) {
  std::vector<TuneResult> out;
  for (double k : factors) {
    if (!(k > 0)) throw ConfigError("multi-start factors must be positive");
    out.push_back(bfgs_minimize(f, lambda0 * k, cfg));
  }
  return out;
}

void write_trace_csv(const std::string& path, const std::vector<TraceEntry>& trace) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  const Index k = trace.empty() ? 0 : trace.front().theta.size();
  os << "evaluation,accepted";
  for (Index i = 0; i < k; ++i) os << ",theta" << i;
  os << ",sure,grad_inf,grad_2\n";
  os << std::setprecision(17);
  for (const auto& e : trace) {
    os << e.evaluation << ',' << int(e.accepted);
    for (Index i = 0; i < k; ++i) os << ',' << e.theta[i];
    os << ',' << e.sure << ',' << e.grad.lpNorm<Eigen::Infinity>() << ',' << e.grad.norm() << '\n';
  }
  if (!os) throw IoError("write failed for " + path);
}

}  // namespace sugar
