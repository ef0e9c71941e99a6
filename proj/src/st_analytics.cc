#include "sugar/st_analytics.hpp"

#include "sugar/prox.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace sugar {

void STSetting::validate() const {
  if (!(sigma > 0) || !(lambda > 0) || !(epsilon > 0))
    throw ConfigError("σ, λ and ε must be positive");
  if (!(epsilon < 2 * lambda)) throw ConfigError("the closed forms need ε < 2λ");
  if (mu0.size() == 0) throw ConfigError("μ₀ is empty");
}

double st_phi(double a, double lambda, double eps, double sigma) {
  const double s = std::sqrt(2.0) * sigma;
  return std::erf((a + lambda + eps) / s) - std::erf((a + lambda) / s) + std::erf((a - lambda + eps) / s) -
         std::erf((a - lambda) / s);
}

double st_dofgrad_mean(const STSetting& s) {
  s.validate();
  double acc = 0;
  for (Index i = 0; i < s.mu0.size(); ++i) acc += st_phi(s.mu0[i], s.lambda, s.epsilon, s.sigma) / s.epsilon;
  return -0.5 * acc;
}

double st_dofgrad_var(const STSetting& s) {
  s.validate();
  double a = 0, b = 0;
  for (Index i = 0; i < s.mu0.size(); ++i) {
    const double r = st_phi(s.mu0[i], s.lambda, s.epsilon, s.sigma) / s.epsilon;
    a += r;
    b += r * r;
  }
  return a / (2 * s.epsilon) - 0.25 * b;
}

double st_dofgrad_true(const Vec& mu0, double sigma, double lambda) {
  if (!(sigma > 0) || !(lambda > 0)) throw ConfigError("σ and λ must be positive");
  double acc = 0;
  for (Index i = 0; i < mu0.size(); ++i) {
    const double p = (mu0[i] + lambda) / sigma, m = (mu0[i] - lambda) / sigma;
    acc += std::exp(-0.5 * p * p) + std::exp(-0.5 * m * m);
  }
  return -acc / (std::sqrt(2 * std::numbers::pi) * sigma);
}

double st_dofgrad_fd(const Vec& y, double lambda, double eps) {
  const Vec j0 = soft_threshold_jacs(y, lambda).jac_rho;
  const Vec j1 = soft_threshold_jacs(y.array() + eps, lambda).jac_rho;
  return (j1 - j0).sum() / eps;
}

double st_sugar_fd(const Vec& y, double lambda, double eps, double sigma) {
  const auto j = soft_threshold_jacs(y, lambda);
  const double t1 = 2.0 * j.jac_rho.dot(soft_threshold(y, lambda) - y);
  return t1 + 2 * sigma * sigma * st_dofgrad_fd(y, lambda, eps);
}

double st_risk_gradient_true(const Vec& mu0, double sigma, double lambda) {
  double p_active = 0;
  const double s = std::sqrt(2.0) * sigma;
  for (Index i = 0; i < mu0.size(); ++i)
    p_active += 0.5 * std::erfc((lambda - mu0[i]) / s) + 0.5 * std::erfc((lambda + mu0[i]) / s);
  return 2 * lambda * p_active + 2 * sigma * sigma * st_dofgrad_true(mu0, sigma, lambda);
}

Vec compressible_mu0(Index P, double gamma, double c) {
  if (P < 1 || !(gamma > 0)) throw ConfigError("compressible model needs P >= 1 and γ > 0");
  Vec m(P);
  for (Index i = 0; i < P; ++i) m[i] = (i % 2 ? -c : c) * std::pow(double(i + 1), -1.0 / gamma);
  return m;
}

std::vector<MseCell> st_mse_surface(const std::vector<Index>& Ps, const std::vector<double>& epsilons,
                                    double gamma, double c, double sigma, double lambda) {
  std::vector<MseCell> out;
  for (Index P : Ps) {
    STSetting s{compressible_mu0(P, gamma, c), sigma, lambda, 0};
    const double truth = st_dofgrad_true(s.mu0, sigma, lambda);
    const double p2 = double(P) * double(P);
    for (double e : epsilons) {
      s.epsilon = e;
      const double b = st_dofgrad_mean(s) - truth;
      const double v = st_dofgrad_var(s);
      out.push_back({P, e, b * b / p2, v / p2, (b * b + v) / p2});
    }
  }
  return out;
}

std::vector<std::pair<Index, double>> argmin_epsilon(const std::vector<MseCell>& cells) {
  std::vector<std::pair<Index, double>> out;
  std::vector<double> best;
  for (const auto& c : cells) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == c.P; });
    if (it == out.end()) {
      out.emplace_back(c.P, c.epsilon);
      best.push_back(c.mse);
    } else {
      const auto k = std::size_t(it - out.begin());
      if (c.mse < best[k]) {
        best[k] = c.mse;
        it->second = c.epsilon;
      }
    }
  }
  return out;
}

std::vector<ConsistencyRow> st_sugar_consistency(const std::vector<Index>& Ps, const EpsilonRule& rule,
                                                 int replicates, double gamma, double c, double sigma,
                                                 double lambda, std::uint64_t seed) {
  if (replicates < 2) throw ConfigError("consistency study needs at least two replicates");
  std::vector<ConsistencyRow> rows;
  for (Index P : Ps) {
    const Vec mu0 = compressible_mu0(P, gamma, c);
    const double eps = rule(P);
    const double truth = st_risk_gradient_true(mu0, sigma, lambda);
    std::vector<double> err(replicates);
    for (int r = 0; r < replicates; ++r) {
      Rng rng(seed, std::uint64_t(P) * 1000003ULL + std::uint64_t(r));
      Vec y;
      bool lebesgue;
      do {  // measure-zero collisions with the threshold are redrawn
        y = mu0 + sigma * rng.normal_vec(P);
        lebesgue = true;
        for (Index i = 0; i < P && lebesgue; ++i)
          lebesgue = std::abs(y[i]) != lambda && std::abs(y[i] + eps) != lambda;
      } while (!lebesgue);
      err[r] = (st_sugar_fd(y, lambda, eps, sigma) - truth) / double(P);
    }
    const double mean = std::accumulate(err.begin(), err.end(), 0.0) / replicates;
    double ss = 0, sq = 0;
    for (double e : err) {
      ss += (e - mean) * (e - mean);
      sq += e * e;
    }
    rows.push_back({P, eps, mean, std::sqrt(ss / (replicates - 1)), std::sqrt(sq / replicates), replicates});
  }
  return rows;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw ConfigError("spearman needs two equal-length samples");
  const auto ra = ranks(a), rb = ranks(b);
  const double n = double(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace sugar
