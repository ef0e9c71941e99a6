#include "sugar/oracles.hpp"
#include "sugar/pipelines.hpp"
#include "sugar/prox.hpp"
#include "sugar/st_analytics.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace sugar;

namespace {

// Small self-check suite, printed as one JSON record per line.
bool run_oracles(const ExperimentConfig& cfg) {
  std::vector<OracleReport> reps;

  Rng rng(cfg.seed, 11);
  const Vec t = 3 * rng.normal_vec(32);
  const double rho = 1.3;
  const Mat fd = fd_jacobian_oracle([&](const Vec& r) { return soft_threshold(t, r[0]); }, Vec::Constant(1, rho), 1e-6);
  reps.push_back(compare("st_jac_rho", (fd.col(0) - soft_threshold_jacs(t, rho).jac_rho).norm(), 0, 1e-6));

  const double sigma = 1.5;
  const Index P = 64;
  const auto chi = mc_expectation_oracle(
      [&](Rng& r, int) { return (sigma * r.normal_vec(P)).squaredNorm(); }, 2000, cfg.seed);
  auto rep = compare("chi_square_mean", chi.mean, P * sigma * sigma, 3 * chi.se);
  reps.push_back(rep);

  ExperimentConfig dc = cfg;
  dc.experiment = "denoise-st";
  const Problem p = build_denoise_st(dc);
  const auto grid = grid_search_oracle([&](double l) { return p.surrogate(Vec::Constant(1, l)); },
                                       p.lambda0[0] / 10, p.lambda0[0] * 10, 50);
  const auto tuned = tune(p, tune_config(dc), p.lambda0);
  reps.push_back(compare("bfgs_vs_grid", std::max(0.0, tuned.sure - grid.best_value), 0,
                         0.01 * std::abs(grid.best_value)));

  bool ok = true;
  for (const auto& r : reps) {
    std::cout << r.to_json() << '\n';
    ok = ok && r.pass;
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SURE/SUGAR parameter tuning for variational inverse problems"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value configuration file");

  ExperimentConfig cfg;
  std::string variant = "fdmc";
  bool global_only = false;
  app.add_option("--sigma", cfg.sigma, "noise level (0 = experiment default)");
  app.add_option("--seed", cfg.seed, "RNG seed");
  app.add_option("--iters", cfg.iters, "solver iterations");
  app.add_option("--eps-c", cfg.eps_c, "C in ε = Cσ P^-α");
  app.add_option("--eps-alpha", cfg.eps_alpha, "α in ε = Cσ P^-α");
  app.add_option("--risk-mode", cfg.risk_mode, "prediction, projection or estimation");
  app.add_option("--variant", variant, "closed-form, mc, fd or fdmc");
  app.add_option("--out-dir", cfg.out_dir, "output directory");
  app.add_option("--n1", cfg.n1, "rows");
  app.add_option("--n2", cfg.n2, "columns");
  app.add_option("--P", cfg.P, "signal length (denoise-st)");
  app.add_option("--J", cfg.J, "wavelet scales (1..3)");
  app.add_option("--nu", cfg.nu, "GFB step");
  app.add_option("--tau", cfg.tau, "CP dual step");
  app.add_option("--xi", cfg.xi, "CP primal step");
  app.add_option("--cp-balance", cfg.cp_balance, "CP primal/dual step balance");
  app.add_option("--alpha-init", cfg.alpha_init, "first BFGS step fraction");
  app.add_option("--stop-ratio", cfg.stop_ratio, "gradient reduction that stops BFGS");
  app.add_option("--max-iters", cfg.max_iters, "BFGS outer iterations");
  app.add_option("--max-evals", cfg.max_evaluations, "objective evaluation budget (0 = none)");
  app.add_option("--input", cfg.input, "PGM image for tv-deblur and wavelet-cs");
  app.add_option("--observed", cfg.observed_fraction, "matcomp observed fraction");
  app.add_option("--ls-error", cfg.target_ls_error, "matcomp least-squares relative error that sets σ");
  app.add_option("--keep", cfg.keep_fraction, "tv-deblur kept frequency fraction");
  app.add_option("--grid-points", cfg.grid_points, "points of risk_curve.csv");
  app.add_option("--replicates", cfg.replicates, "st-analytics replicates");
  app.add_flag("--full-scale", cfg.full_scale, "full-size problems (slow)");
  app.add_flag("--multi-start", cfg.multi_start, "restart BFGS at λ₀·{1/4, 1, 4}");
  app.add_flag("--global-only", global_only, "wavelet-cs: one parameter for all scales");
  app.add_flag("--identity-ops", cfg.identity_ops, "wavelet-cs: Φ = Ψ = Id");

  for (const char* name : {"matcomp", "tv-deblur", "wavelet-cs", "st-analytics", "denoise-st"})
    app.add_subcommand(name, std::string("run the ") + name + " experiment")->fallthrough();
  app.add_subcommand("oracle", "run the oracle self-checks")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    cfg.variant = parse_risk_variant(variant);
    cfg.per_scale = !global_only;
    cfg.experiment = cmd == "oracle" ? "denoise-st" : cmd;
    cfg.validate();
    if (cmd == "oracle") return run_oracles(cfg) ? 0 : 3;
    if (cmd == "st-analytics") {
      run_st_analytics(cfg);
      std::cout << "wrote " << cfg.out_dir << "/{mse_surface,eps_rules,consistency}.csv\n";
      return 0;
    }
    const ResultRecord rec = run_experiment(cfg);
    std::cout << rec.to_json() << '\n';
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 4;
  }
}
