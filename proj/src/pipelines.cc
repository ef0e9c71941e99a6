#include "sugar/pipelines.hpp"

#include "sugar/io.hpp"
#include "sugar/st_analytics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>

namespace sugar {

namespace {

// RNG streams, one per random ingredient of a problem.
enum Stream : std::uint64_t { kTruth = 1, kOperator = 2, kNoise = 3, kProbe = 4 };

const char* kExperiments[] = {"matcomp", "tv-deblur", "wavelet-cs", "st-analytics", "denoise-st"};

Vec to_vec(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

Mat random_orthonormal(Index rows, Index cols, Rng& rng) {
  Mat g(rows, cols);
  for (Index j = 0; j < cols; ++j) g.col(j) = rng.normal_vec(rows);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(rows, cols);
  // Fix column signs so the factor does not depend on the QR's sign convention.
  const Mat r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Index j = 0; j < cols; ++j)
    if (r(j, j) < 0) q.col(j) *= -1;
  return q;
}

std::vector<Index> random_subset(Index n, Index m, Rng& rng) {
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (Index i = 0; i < m; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Mat load_or_cartoon(const ExperimentConfig& cfg, Index n1, Index n2) {
  if (cfg.input.empty()) {
    Rng rng(cfg.seed, kTruth);
    return cartoon_image(n1, n2, rng);
  }
  Mat img = read_pgm(cfg.input);
  const double peak = img.maxCoeff();
  if (peak > 255) img *= 255.0 / peak;
  return img;
}

std::shared_ptr<const RiskWeight> weight_for(const ExperimentConfig& cfg, RiskMode fallback, MapPtr phi) {
  const RiskMode mode = cfg.risk_mode.empty() ? fallback : parse_risk_mode(cfg.risk_mode);
  TraceOptions opts;
  opts.seed = cfg.seed;
  return std::make_shared<RiskWeight>(make_risk_weight(mode, std::move(phi), opts));
}

void finish_problem(Problem& p, const ExperimentConfig& cfg) {
  Rng rng(cfg.seed, kProbe);
  p.delta = rng.normal_vec(p.y.size());
  p.epsilon = epsilon_rule(p.sigma, double(p.y.size()), cfg.eps_c, cfg.eps_alpha);
  p.variant = cfg.variant;
}

Vec noise(const ExperimentConfig& cfg, Index n) {
  Rng rng(cfg.seed, kNoise);
  return rng.normal_vec(n);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (std::find(std::begin(kExperiments), std::end(kExperiments), experiment) == std::end(kExperiments))
    throw ConfigError("unknown experiment '" + experiment + "'");
  if (n1 < 0 || n2 < 0 || P < 0) throw ConfigError("sizes must be positive");
  if (J < 1 || J > 3) throw ConfigError("wavelet scales J must lie in 1..3");
  if (sigma < 0 || !std::isfinite(sigma)) throw ConfigError("sigma must be positive");
  if (iters < 1) throw ConfigError("iters must be positive");
  if (nu < 0 || tau < 0 || xi < 0) throw ConfigError("step sizes must be positive");
  if (!(cp_balance > 0)) throw ConfigError("cp_balance must be positive");
  if (!(eps_c > 0) || eps_alpha < 0) throw ConfigError("ε rule needs C > 0 and α >= 0");
  if (!(observed_fraction > 0 && observed_fraction <= 1)) throw ConfigError("observed_fraction must lie in (0, 1]");
  if (!(keep_fraction > 0 && keep_fraction <= 1)) throw ConfigError("keep_fraction must lie in (0, 1]");
  if (!(target_ls_error > 0)) throw ConfigError("target_ls_error must be positive");
  if (grid_points < 10) throw ConfigError("grid_points must be at least 10");
  if (replicates < 2) throw ConfigError("replicates must be at least 2");
  if (!risk_mode.empty()) parse_risk_mode(risk_mode);
  tune_config(*this).validate();
}

double Problem::quality(const Vec& x) const {
  if (quality_name == "psnr") return psnr(x, x0);
  return (x - x0).norm() / x0.norm();
}

Vec Problem::estimate(const Vec& theta) const {
  return scheme->solve(y, theta, nullptr, false).x.head(phi->in_dim());
}

Evaluation Problem::evaluate(const Vec& theta) const {
  RiskConfig rc;
  rc.variant = variant;
  rc.sigma = sigma;
  rc.epsilon = epsilon;
  rc.delta = delta;
  const auto run = run_with_risk(*scheme, y, theta, *weight, rc);
  return {run.report.sure, run.report.sugar};
}

double Problem::surrogate(const Vec& theta) const {
  RiskConfig rc;
  rc.variant = variant;
  rc.sigma = sigma;
  rc.epsilon = epsilon;
  rc.delta = delta;
  rc.want_gradient = false;
  return run_with_risk(*scheme, y, theta, *weight, rc).report.sure;
}

double Problem::oracle_risk(const Vec& theta) const {
  const Vec mu = scheme->solve(y, theta, nullptr, false).mu;
  const Vec e = mu - phi->apply(x0);
  return e.dot(weight->apply_AtA(e));
}

Mat cartoon_image(Index n1, Index n2, Rng& rng) {
  Mat img = Mat::Constant(n1, n2, 40 + 60 * rng.uniform());
  const int rects = 10;
  for (int r = 0; r < rects; ++r) {
    const Index h = std::max<Index>(2, n1 / 8 + rng.below(std::max<Index>(1, n1 / 3)));
    const Index w = std::max<Index>(2, n2 / 8 + rng.below(std::max<Index>(1, n2 / 3)));
    const Index i = rng.below(std::max<Index>(1, n1 - h)), j = rng.below(std::max<Index>(1, n2 - w));
    img.block(i, j, std::min(h, n1 - i), std::min(w, n2 - j)).setConstant(255 * rng.uniform());
  }
  return img;
}

double psnr(const Vec& x, const Vec& ref, double peak) {
  const double mse = (x - ref).squaredNorm() / double(x.size());
  return 10 * std::log10(peak * peak / mse);
}

double isotropic_tv(const Vec& f, Index n1, Index n2) {
  const Vec g = make_discrete_gradient(n1, n2)->apply(f);
  const Index N = n1 * n2;
  return (g.head(N).array().square() + g.tail(N).array().square()).sqrt().sum();
}

Problem build_matcomp(const ExperimentConfig& cfg) {
  Problem p;
  p.name = "matcomp";
  p.n1 = cfg.n1 ? cfg.n1 : (cfg.full_scale ? 1000 : 300);
  p.n2 = cfg.n2 ? cfg.n2 : (cfg.full_scale ? 100 : 60);
  const Index n1 = p.n1, n2 = p.n2, N = n1 * n2, r = std::min(n1, n2);
  const Index m = std::llround(cfg.observed_fraction * double(N));
  if (m < 1) throw ConfigError("matcomp: no observed entries");

  Rng truth(cfg.seed, kTruth);
  const Mat V = random_orthonormal(n1, r, truth), U = random_orthonormal(n2, r, truth);
  Vec spec(r);
  for (Index k = 0; k < r; ++k) spec[k] = 1.0 / double(k + 1);
  p.x0 = to_vec(V * spec.asDiagonal() * U.transpose());

  Rng op(cfg.seed, kOperator);
  const auto observed = random_subset(N, m, op);
  p.phi = make_mask(N, observed, IndexBase::Zero);
  const Vec w = noise(cfg, m);
  if (cfg.sigma > 0) {
    p.sigma = cfg.sigma;
  } else {
    // Least squares fills unobserved entries with zeros; pick σ so its relative error hits the target.
    const double missing = p.x0.squaredNorm() - p.phi->apply(p.x0).squaredNorm();
    const double budget = std::pow(cfg.target_ls_error, 2) * p.x0.squaredNorm() - missing;
    if (!(budget > 0))
      throw ConfigError("matcomp: least-squares error target is below the error from missing entries");
    p.sigma = std::sqrt(budget / w.squaredNorm());
  }
  p.y = p.phi->apply(p.x0) + p.sigma * w;
  p.x_ls = p.phi->adjoint(p.y);

  GfbConfig g;
  g.iters = cfg.iters;
  g.nu = cfg.nu;
  p.scheme = make_gfb_scheme(make_quadratic_fidelity(p.phi), {make_nuclear_atom(n1, n2, 0)}, p.phi, 1, g);
  p.weight = weight_for(cfg, RiskMode::Prediction, p.phi);
  const Mat xls = Eigen::Map<const Mat>(p.x_ls.data(), n1, n2);
  const double nuc = Eigen::BDCSVD<Mat>(xls).singularValues().sum();
  p.lambda0 = lambda_init(m, p.sigma, Vec::Constant(1, nuc));
  p.quality_name = "relative_error";
  finish_problem(p, cfg);
  return p;
}

Problem build_tv_deblur(const ExperimentConfig& cfg) {
  Problem p;
  p.name = "tv-deblur";
  const Index side = cfg.full_scale ? 512 : 64;
  Mat img;
  if (cfg.input.empty()) {
    p.n1 = cfg.n1 ? cfg.n1 : side;
    p.n2 = cfg.n2 ? cfg.n2 : side;
    img = load_or_cartoon(cfg, p.n1, p.n2);
  } else {
    img = load_or_cartoon(cfg, 0, 0);
    p.n1 = img.rows();
    p.n2 = img.cols();
  }
  const Index n1 = p.n1, n2 = p.n2, N = n1 * n2;
  p.x0 = to_vec(img);
  p.sigma = cfg.sigma > 0 ? cfg.sigma : 10.0;
  p.phi = make_periodic_convolution(gaussian_kernel(n1, n2, 1.0, 2), lowpass_frequency_mask(n1, n2, cfg.keep_fraction));
  p.y = p.phi->apply(p.x0) + p.sigma * noise(cfg, N);
  const GramSolver gram(p.phi);
  p.x_ls = p.phi->adjoint(gram.pinv(p.y));

  GfbConfig g;
  g.iters = cfg.iters;
  g.nu = cfg.nu;
  std::vector<AtomPtr> atoms{make_block_l1_atom(3 * N, 0, N, N, 2), make_tv_constraint_atom(n1, n2)};
  p.scheme = make_gfb_scheme(make_quadratic_fidelity(p.phi, 3 * N), std::move(atoms), p.phi, 1, g);
  p.weight = weight_for(cfg, RiskMode::Projection, p.phi);
  p.lambda0 = lambda_init(N, p.sigma, Vec::Constant(1, isotropic_tv(p.x_ls, n1, n2)));
  p.quality_name = "psnr";
  finish_problem(p, cfg);
  return p;
}

Problem build_wavelet_cs(const ExperimentConfig& cfg, bool per_scale) {
  Problem p;
  p.name = "wavelet-cs";
  const Index side = cfg.full_scale ? 512 : 64;
  Mat img;
  if (cfg.input.empty()) {
    p.n1 = cfg.n1 ? cfg.n1 : side;
    p.n2 = cfg.n2 ? cfg.n2 : side;
    img = load_or_cartoon(cfg, p.n1, p.n2);
  } else {
    img = load_or_cartoon(cfg, 0, 0);
    p.n1 = img.rows();
    p.n2 = img.cols();
  }
  const Index n1 = p.n1, n2 = p.n2, N = n1 * n2;
  p.x0 = to_vec(img);
  p.sigma = cfg.sigma > 0 ? cfg.sigma : 10.0;

  MapPtr K;
  AtomPtr G;
  Index m = 1;
  if (cfg.identity_ops) {
    p.phi = make_identity(N);
    K = make_identity(N);
    G = make_l1_atom(N, 0);
  } else {
    Rng op(cfg.seed, kOperator);
    const MapPtr conv = make_periodic_convolution(n1, n2, random_phase_spectrum(n1, n2, op));
    p.phi = compose(make_mask(N, random_subset(N, N / 2, op), IndexBase::Zero), conv);
    K = make_undecimated_wavelet(n1, n2, cfg.J);
    std::vector<Index> owner(2 * cfg.J, 0);
    if (per_scale) {
      for (int b = 0; b < 2 * cfg.J; ++b) owner[b] = b / 2;
      m = cfg.J;
    }
    G = make_multiscale_l1_atom(N, owner);
  }
  p.y = p.phi->apply(p.x0) + p.sigma * noise(cfg, p.phi->out_dim());
  const GramSolver gram(p.phi);
  p.x_ls = p.phi->adjoint(gram.pinv(p.y));

  CpConfig c;
  c.iters = cfg.iters;
  c.tau = cfg.tau;
  c.xi = cfg.xi;
  c.balance = cfg.cp_balance;
  p.scheme = make_cp_scheme(make_quadratic_data_atom(std::make_shared<GramSolver>(p.phi)), G, K, p.phi, m, c);
  p.weight = weight_for(cfg, RiskMode::Projection, p.phi);
  p.lambda0 = lambda_init(p.y.size(), p.sigma, Vec::Constant(m, K->apply(p.x_ls).lpNorm<1>() / double(m)));
  p.quality_name = "psnr";
  finish_problem(p, cfg);
  return p;
}

Problem build_denoise_st(const ExperimentConfig& cfg) {
  Problem p;
  p.name = "denoise-st";
  const Index P = cfg.P ? cfg.P : (cfg.full_scale ? Index(1) << 16 : 256);
  p.n1 = P;
  p.n2 = 1;
  p.sigma = cfg.sigma > 0 ? cfg.sigma : 1.0;
  p.x0 = compressible_mu0(P, 1.0, 10 * p.sigma);
  p.phi = make_identity(P);
  p.y = p.x0 + p.sigma * noise(cfg, P);
  p.x_ls = p.y;
  p.scheme = make_soft_threshold_scheme(P);
  p.weight = weight_for(cfg, RiskMode::Prediction, p.phi);
  p.lambda0 = lambda_init(P, p.sigma, Vec::Constant(1, p.y.lpNorm<1>()));
  p.quality_name = "relative_error";
  finish_problem(p, cfg);
  return p;
}

TuneConfig tune_config(const ExperimentConfig& cfg) {
  TuneConfig t;
  t.alpha_init = cfg.alpha_init;
  t.stop_ratio = cfg.stop_ratio;
  t.max_outer_iters = cfg.max_iters;
  t.max_evaluations = cfg.max_evaluations;
  return t;
}

TuneResult tune(const Problem& p, const TuneConfig& tc, const Vec& theta0) {
  return bfgs_minimize([&p](const Vec& th) { return p.evaluate(th); }, theta0, tc);
}

GridResult risk_curve(const Problem& p, double lo, double hi, int points) {
  const Index m = p.scheme->param_dim();
  return grid_search_oracle([&](double t) { return p.surrogate(Vec::Constant(m, t)); }, lo, hi, points);
}

std::string ResultRecord::to_json(bool with_runtime) const {
  using nlohmann::json;
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json j{{"experiment", experiment},
         {"sigma", sigma},
         {"theta", vec(theta)},
         {"sure", sure},
         {"oracle_risk", oracle_risk},
         {"quality", {{"metric", quality_name}, {"at_theta", quality}, {"least_squares", quality_ls}}},
         {"evaluations", evaluations},
         {"converged", converged},
         {"line_search_failed", line_search_failed},
         {"trace", trace_file},
         {"rng", {{"name", Rng::name()}, {"seed", seed}}}};
  if (rank >= 0) j["rank"] = rank;
  if (theta_global.size()) {
    j["theta_global"] = vec(theta_global);
    j["sure_global"] = sure_global;
  }
  for (const auto& r : table) j["table"].push_back({{"scale", r.scale}, {"sure", r.sure}, {quality_name, r.quality}});
  for (const auto& s : starts)
    j["starts"].push_back({{"theta", vec(s.theta)}, {"sure", s.sure}, {"evaluations", s.evaluations}});
  if (with_runtime) j["runtime_s"] = runtime_s;
  return j.dump(2);
}

namespace {

Index numerical_rank(const Vec& x, Index n1, Index n2) {
  const Vec s = Eigen::BDCSVD<Mat>(Eigen::Map<const Mat>(x.data(), n1, n2)).singularValues();
  if (s.size() == 0 || s[0] == 0) return 0;
  return (s.array() > 1e-9 * s[0]).count();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os || !(os << text << '\n')) throw IoError("cannot write " + path.string());
}

void write_grid(const std::filesystem::path& path, const GridResult& g) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << "lambda,sure\n" << std::setprecision(17);
  for (std::size_t i = 0; i < g.grid.size(); ++i) os << g.grid[i] << ',' << g.values[i] << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

TuneResult tune_with_starts(const Problem& p, const ExperimentConfig& cfg, const Vec& theta0,
                            std::vector<TuneResult>* starts) {
  const TuneConfig tc = tune_config(cfg);
  if (!cfg.multi_start) return tune(p, tc, theta0);
  auto runs = multi_start([&p](const Vec& th) { return p.evaluate(th); }, theta0, tc);
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].sure < runs[best].sure) best = i;
  if (starts) *starts = runs;
  return runs[best];
}

}  // namespace

ResultRecord run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.experiment == "st-analytics") throw ConfigError("st-analytics writes tables; use run_st_analytics");
  const auto t0 = std::chrono::steady_clock::now();
  namespace fs = std::filesystem;
  const fs::path out(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());

  Problem p;
  ResultRecord rec;
  rec.experiment = cfg.experiment;
  rec.seed = cfg.seed;
  TuneResult best;
  std::vector<TraceEntry> trace;
  if (cfg.experiment == "wavelet-cs" && cfg.per_scale && !cfg.identity_ops && cfg.J > 1) {
    const Problem global = build_wavelet_cs(cfg, false);
    const TuneResult g = tune_with_starts(global, cfg, global.lambda0, &rec.starts);
    rec.theta_global = g.theta;
    rec.sure_global = g.sure;
    trace = g.trace;
    p = build_wavelet_cs(cfg, true);
    best = tune(p, tune_config(cfg), Vec::Constant(cfg.J, g.theta[0]));
    for (auto e : best.trace) {
      e.evaluation += g.evaluations;
      trace.push_back(e);
    }
    rec.evaluations = g.evaluations + best.evaluations;
  } else {
    if (cfg.experiment == "matcomp")
      p = build_matcomp(cfg);
    else if (cfg.experiment == "tv-deblur")
      p = build_tv_deblur(cfg);
    else if (cfg.experiment == "wavelet-cs")
      p = build_wavelet_cs(cfg, cfg.per_scale);
    else
      p = build_denoise_st(cfg);
    best = tune_with_starts(p, cfg, p.lambda0, &rec.starts);
    trace = best.trace;
    rec.evaluations = best.evaluations;
  }

  rec.sigma = p.sigma;
  rec.theta = best.theta;
  rec.sure = best.sure;
  rec.converged = best.converged;
  rec.line_search_failed = best.line_search_failed;
  const Vec x = p.estimate(best.theta);
  rec.quality_name = p.quality_name;
  rec.quality = p.quality(x);
  rec.quality_ls = p.quality(p.x_ls);
  rec.oracle_risk = p.oracle_risk(best.theta);
  if (cfg.experiment == "matcomp") rec.rank = numerical_rank(x, p.n1, p.n2);
  if (cfg.experiment == "wavelet-cs")
    for (double s : {0.75, 1.0, 1.25})
      rec.table.push_back({s, p.surrogate(s * best.theta), p.quality(p.estimate(s * best.theta))});

  rec.trace_file = "trace.csv";
  write_trace_csv((out / rec.trace_file).string(), trace);
  const double centre = best.theta.mean();
  const double lo = std::min(centre, p.lambda0.mean()) / 10, hi = std::max(centre, p.lambda0.mean()) * 10;
  write_grid(out / "risk_curve.csv", risk_curve(p, lo, hi, cfg.grid_points));
  rec.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(out / "result.json", rec.to_json());
  return rec;
}

void run_st_analytics(const ExperimentConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  const fs::path out(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());

  const double sigma = cfg.sigma > 0 ? cfg.sigma : 1.0, lambda = 2 * sigma, gamma = 0.5, c = 5 * sigma;
  const int max_log2 = cfg.full_scale ? 22 : 18;
  std::vector<Index> Ps;
  for (int k = 8; k <= max_log2; k += 2) Ps.push_back(Index(1) << k);

  std::vector<double> eps;
  for (double e : log_grid(0.01 * sigma, 2 * sigma, 40)) eps.push_back(e);
  const auto surface = st_mse_surface(Ps, eps, gamma, c, sigma, lambda);
  const auto best = argmin_epsilon(surface);
  {
    std::ofstream os(out / "mse_surface.csv");
    if (!os) throw IoError("cannot write mse_surface.csv");
    os << "P,epsilon,bias2,variance,mse,argmin_epsilon\n" << std::setprecision(17);
    for (const auto& cell : surface) {
      const auto it = std::find_if(best.begin(), best.end(), [&](const auto& b) { return b.first == cell.P; });
      os << cell.P << ',' << cell.epsilon << ',' << cell.bias2 << ',' << cell.variance << ',' << cell.mse << ','
         << it->second << '\n';
    }
  }
  {
    std::ofstream os(out / "eps_rules.csv");
    if (!os) throw IoError("cannot write eps_rules.csv");
    os << "alpha,P,epsilon,bias2,variance,mse\n" << std::setprecision(17);
    for (double a : {0.0, cfg.eps_alpha, 1.0, 2.0})
      for (Index P : Ps) {
        const double e = epsilon_rule(sigma, double(P), cfg.eps_c, a);
        const auto cell = st_mse_surface({P}, {e}, gamma, c, sigma, lambda).front();
        os << a << ',' << P << ',' << e << ',' << cell.bias2 << ',' << cell.variance << ',' << cell.mse << '\n';
      }
  }
  {
    std::vector<Index> cP;
    for (int k = 8; k <= 14; ++k) cP.push_back(Index(1) << k);
    std::ofstream os(out / "consistency.csv");
    if (!os) throw IoError("cannot write consistency.csv");
    os << "rule,P,epsilon,mean_err,sd_err,rms_err,replicates\n" << std::setprecision(17);
    const auto admissible = st_sugar_consistency(
        cP, [&](Index P) { return epsilon_rule(sigma, double(P), cfg.eps_c, cfg.eps_alpha); }, cfg.replicates,
        gamma, c, sigma, lambda, cfg.seed);
    const auto inadmissible = st_sugar_consistency(
        cP, [&](Index P) { return sigma / (double(P) * double(P)); }, cfg.replicates, gamma, c, sigma, lambda,
        cfg.seed);
    for (const auto& [name, rows] : {std::pair{"admissible", &admissible}, std::pair{"sigma/P^2", &inadmissible}})
      for (const auto& r : *rows)
        os << name << ',' << r.P << ',' << r.epsilon << ',' << r.mean_err << ',' << r.sd_err << ',' << r.rms_err
           << ',' << r.replicates << '\n';
  }
  nlohmann::json meta{{"experiment", "st-analytics"},
                      {"sigma", sigma},
                      {"lambda", lambda},
                      {"gamma", gamma},
                      {"c", c},
                      {"rng", {{"name", Rng::name()}, {"seed", cfg.seed}}}};
  for (const auto& [P, e] : best) meta["argmin_epsilon"].push_back({{"P", P}, {"epsilon", e}});
  write_text(out / "result.json", meta.dump(2));
}

}  // namespace sugar
