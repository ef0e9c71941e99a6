#pragma once

#include "sugar/autotune.hpp"
#include "sugar/oracles.hpp"
#include "sugar/solvers.hpp"

#include <memory>
#include <string>
#include <vector>

namespace sugar {

struct ExperimentConfig {
  std::string experiment = "denoise-st";  // matcomp, tv-deblur, wavelet-cs, st-analytics, denoise-st
  Index n1 = 0, n2 = 0, P = 0;            // 0 picks the experiment's desk-scale size
  int J = 3;
  double sigma = 0;  // 0 picks the experiment default
  int iters = 100;
  double nu = 0, tau = 0, xi = 0;  // 0 selects the default steps
  double cp_balance = 10;          // wavelet-cs: pixels live on [0, 255], dual variables on [-λ, λ]
  RiskVariant variant = RiskVariant::FDMC;
  double eps_c = 2.0, eps_alpha = 0.3;
  std::string risk_mode;  // empty picks the experiment default
  double alpha_init = 0.9, stop_ratio = 0.02;
  int max_iters = 50;
  int max_evaluations = 0;
  bool multi_start = false;
  std::uint64_t seed = 1;
  std::string input;  // optional PGM for the imaging experiments
  std::string out_dir = "out";
  bool full_scale = false;
  bool per_scale = true;         // wavelet-cs
  bool identity_ops = false;     // wavelet-cs with Φ = Ψ = Id
  double observed_fraction = 0.25;  // matcomp
  double target_ls_error = 0.9;     // matcomp: σ is set so that least squares hits this error
  double keep_fraction = 0.2;       // tv-deblur: kept low frequencies
  int grid_points = 12;
  int replicates = 100;  // st-analytics

  void validate() const;
};

// A tuning problem: data, estimator, weighting and the fixed FDMC probe.
struct Problem {
  std::string name;
  Index n1 = 0, n2 = 0;
  Vec x0;  // ground truth in the solution space
  Vec y;
  MapPtr phi;
  SchemePtr scheme;
  std::shared_ptr<const RiskWeight> weight;
  double sigma = 1;
  Vec x_ls;
  Vec lambda0;
  Vec delta;
  double epsilon = 0;
  RiskVariant variant = RiskVariant::FDMC;
  std::string quality_name;  // "relative_error" or "psnr"

  double quality(const Vec& x) const;
  bool quality_higher_is_better() const { return quality_name == "psnr"; }
  Vec estimate(const Vec& theta) const;  // x(y, θ) restricted to the first dim(Φ*) entries
  Evaluation evaluate(const Vec& theta) const;
  double surrogate(const Vec& theta) const;  // SURE only, no gradient propagation
  double oracle_risk(const Vec& theta) const;  // ‖A(μ - Φx₀)‖²
};

Problem build_matcomp(const ExperimentConfig& cfg);
Problem build_tv_deblur(const ExperimentConfig& cfg);
Problem build_wavelet_cs(const ExperimentConfig& cfg, bool per_scale);
Problem build_denoise_st(const ExperimentConfig& cfg);

// Piecewise-constant image of random axis-aligned rectangles on [0, 255].
Mat cartoon_image(Index n1, Index n2, Rng& rng);
double psnr(const Vec& x, const Vec& ref, double peak = 255.0);
double isotropic_tv(const Vec& f, Index n1, Index n2);

struct TableRow {
  double scale;
  double sure;
  double quality;
};

struct ResultRecord {
  std::string experiment;
  Vec theta;
  double sigma = 0;
  double sure = 0;
  double oracle_risk = 0;
  std::string quality_name;
  double quality = 0;
  double quality_ls = 0;
  Index rank = -1;  // matcomp only
  int evaluations = 0;
  bool converged = false;
  bool line_search_failed = false;
  double runtime_s = 0;
  std::string trace_file;
  std::uint64_t seed = 0;
  Vec theta_global;      // wavelet-cs: single-parameter optimum
  double sure_global = 0;
  std::vector<TableRow> table;  // wavelet-cs: 0.75, 1, 1.25 times θ*
  std::vector<TuneResult> starts;

  std::string to_json(bool with_runtime = true) const;
};

TuneConfig tune_config(const ExperimentConfig& cfg);
TuneResult tune(const Problem& p, const TuneConfig& tc, const Vec& theta0);
// Surrogate SURE over θ = t·1 on a log grid spanning [lo, hi].
GridResult risk_curve(const Problem& p, double lo, double hi, int points);

// Runs one experiment and writes result.json, trace.csv and risk_curve.csv under out_dir.
ResultRecord run_experiment(const ExperimentConfig& cfg);
// ST analytics tables: mse_surface.csv, eps_rules.csv, consistency.csv.
void run_st_analytics(const ExperimentConfig& cfg);

}  // namespace sugar
