#pragma once

#include "sugar/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sugar {

struct Evaluation {
  double sure = 0;
  Vec grad;
};

// θ ↦ (SURE, SUGAR) with δ and ε held fixed by the caller.
using Objective = std::function<Evaluation(const Vec& theta)>;

struct TuneConfig {
  double alpha_init = 0.9;
  double stop_ratio = 0.02;
  int max_outer_iters = 50;
  int max_ls_failures = 30;
  int max_evaluations = 0;  // 0 = no budget
  double c1 = 1e-4;
  double c2 = 0.9;
  void validate() const;
};

struct TraceEntry {
  int evaluation;
  Vec theta;
  double sure;
  Vec grad;
  bool accepted;
};

struct TuneResult {
  Vec theta;  // best seen
  double sure = 0;
  Vec grad;
  std::vector<TraceEntry> trace;
  int evaluations = 0;
  bool converged = false;
  bool line_search_failed = false;
  bool iteration_limit = false;
};

// λ₀^k = Pσ² / (4 Σ_k R^k(x_LS)), one entry per regularizer value.
Vec lambda_init(Index P, double sigma, const Vec& reg_values);
// Diagonal of B₁ = |α λ₀ / g₀|. Zero gradient entries borrow the largest finite sibling;
// an all-zero gradient returns an empty vector.
Vec b1_init(const Vec& lambda0, const Vec& grad0, double alpha);

TuneResult bfgs_minimize(const Objective& f, const Vec& lambda0, const TuneConfig& cfg);
// Restarts at λ₀·factor; results are in factor order.
std::vector<TuneResult> multi_start(const Objective& f, const Vec& lambda0, const TuneConfig& cfg,
                                    const std::vector<double>& factors = {0.25, 1.0, 4.0});

void write_trace_csv(const std::string& path, const std::vector<TraceEntry>& trace);

}  // namespace sugar
