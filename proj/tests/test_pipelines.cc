#include "sugar/pipelines.hpp"
#include "sugar/prox.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

using namespace sugar;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("sugar_pipe_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Pipelines, ConfigValidation) {
  ExperimentConfig c;
  c.experiment = "nope";
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.J = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.risk_mode = "weird";
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.grid_points = 5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.alpha_init = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Pipelines, DenoiseWritesOutputsAndIsDeterministic) {
  ExperimentConfig c;
  c.experiment = "denoise-st";
  c.out_dir = scratch("ds1").string();
  const auto a = run_experiment(c);
  c.out_dir = scratch("ds2").string();
  const auto b = run_experiment(c);
  for (const char* f : {"result.json", "trace.csv", "risk_curve.csv"}) EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / f));
  EXPECT_EQ(a.to_json(false), b.to_json(false));
  EXPECT_EQ(slurp(fs::temp_directory_path() / "sugar_pipe_ds1" / "trace.csv"),
            slurp(fs::path(c.out_dir) / "trace.csv"));
  EXPECT_LT(a.quality, a.quality_ls);
  const auto j = nlohmann::json::parse(slurp(fs::path(c.out_dir) / "result.json"));
  EXPECT_EQ(j["rng"]["name"], "splitmix64-counter");
  EXPECT_EQ(j["theta"].size(), 1u);
}

TEST(Pipelines, MatcompSmallImprovesOnLeastSquares) {
  ExperimentConfig c;
  c.experiment = "matcomp";
  c.n1 = 120;
  c.n2 = 24;
  c.iters = 60;
  c.out_dir = scratch("mc").string();
  const auto r = run_experiment(c);
  EXPECT_NEAR(r.quality_ls, 0.9, 1e-12);
  EXPECT_LT(r.quality, r.quality_ls);
  EXPECT_GE(r.rank, 1);
  EXPECT_LE(r.rank, 24);
}

TEST(Pipelines, MatcompNoiselessFullObservationRecoversTruth) {
  ExperimentConfig c;
  c.experiment = "matcomp";
  c.n1 = 30;
  c.n2 = 10;
  c.observed_fraction = 1.0;
  c.sigma = 1e-6;
  c.iters = 30;
  const Problem p = build_matcomp(c);
  const auto t = tune(p, tune_config(c), p.lambda0);
  EXPECT_GT(t.theta[0], 0);
  EXPECT_LT(p.quality(p.estimate(t.theta)), 1e-3);
}

TEST(Pipelines, MatcompRejectsUnreachableLeastSquaresTarget) {
  ExperimentConfig c;
  c.experiment = "matcomp";
  c.n1 = 30;
  c.n2 = 10;
  c.target_ls_error = 0.5;  // 75% missing entries already cost more than that
  EXPECT_THROW(build_matcomp(c), ConfigError);
}

TEST(Pipelines, TvDeblurAtTinyLambdaApproachesLeastSquares) {
  ExperimentConfig c;
  c.experiment = "tv-deblur";
  c.n1 = c.n2 = 32;
  c.iters = 300;
  const Problem p = build_tv_deblur(c);
  const double ls = p.quality(p.x_ls);
  EXPECT_NEAR(p.quality(p.estimate(Vec::Constant(1, 1e-8))), ls, 0.5);
}

TEST(Pipelines, WaveletIdentityCollapsesToSoftThresholding) {
  ExperimentConfig c;
  c.experiment = "wavelet-cs";
  c.identity_ops = true;
  c.J = 1;
  c.n1 = c.n2 = 16;
  c.iters = 400;
  c.cp_balance = 1;
  const Problem p = build_wavelet_cs(c, true);
  const Vec th = Vec::Constant(1, 12.0);
  EXPECT_LT((p.estimate(th) - soft_threshold(p.y, 12.0)).norm(), 1e-6 * p.y.norm());
}

TEST(Pipelines, WaveletTableAndPerScaleGain) {
  ExperimentConfig c;
  c.experiment = "wavelet-cs";
  c.n1 = c.n2 = 32;
  c.J = 2;
  c.iters = 60;
  c.out_dir = scratch("wcs").string();
  const auto r = run_experiment(c);
  ASSERT_EQ(r.table.size(), 3u);
  EXPECT_LE(r.table[1].sure, r.table[0].sure);
  EXPECT_LE(r.table[1].sure, r.table[2].sure);
  EXPECT_LE(r.sure, r.sure_global);
  EXPECT_EQ(r.theta.size(), 2);
}

TEST(Pipelines, StAnalyticsTables) {
  ExperimentConfig c;
  c.experiment = "st-analytics";
  c.replicates = 10;
  c.out_dir = scratch("sta").string();
  run_st_analytics(c);
  const auto s = slurp(fs::path(c.out_dir) / "mse_surface.csv");
  EXPECT_EQ(s.substr(0, s.find('\n')), "P,epsilon,bias2,variance,mse,argmin_epsilon");
  EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "eps_rules.csv"));
  EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "consistency.csv"));
}

TEST(Pipelines, CartoonAndMetrics) {
  Rng a(3, 1), b(3, 1);
  const Mat x = cartoon_image(20, 30, a);
  EXPECT_EQ(x, cartoon_image(20, 30, b));
  EXPECT_GE(x.minCoeff(), 0);
  EXPECT_LE(x.maxCoeff(), 255);
  const Vec v = Eigen::Map<const Vec>(x.data(), x.size());
  EXPECT_NEAR(psnr(v.array() + 1.0, v), 20 * std::log10(255.0), 1e-12);
  EXPECT_DOUBLE_EQ(isotropic_tv(Vec::Constant(12, 4), 3, 4), 0.0);
}

TEST(Pipelines, MissingImageIsAnIoError) {
  ExperimentConfig c;
  c.experiment = "tv-deblur";
  c.input = "/nonexistent/image.pgm";
  EXPECT_THROW(build_tv_deblur(c), IoError);
}
