#include "charcoal/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "charcoal/error.hpp"
#include "charcoal/rng.hpp"

namespace charcoal {

Design parse_design(const std::string& name) {
  if (name == "gauss") return Design::gauss;
  if (name == "ar" || name == "ar-toeplitz") return Design::ar_toeplitz;
  if (name == "rademacher") return Design::rademacher;
  throw ConfigError("unknown design '" + name + "' (expected gauss, ar, rademacher)");
}

Noise parse_noise(const std::string& name) {
  if (name == "gauss") return Noise::gauss;
  if (name == "t4") return Noise::t4;
  if (name == "t6") return Noise::t6;
  if (name == "exp") return Noise::exp_centered;
  if (name == "rademacher") return Noise::rademacher;
  throw ConfigError("unknown noise '" + name + "' (expected gauss, t4, t6, exp, rademacher)");
}

std::string to_string(Design d) {
  switch (d) {
    case Design::gauss: return "gauss";
    case Design::ar_toeplitz: return "ar";
    case Design::rademacher: return "rademacher";
  }
  return "gauss";
}

std::string to_string(Noise e) {
  switch (e) {
    case Noise::gauss: return "gauss";
    case Noise::t4: return "t4";
    case Noise::t6: return "t6";
    case Noise::exp_centered: return "exp";
    case Noise::rademacher: return "rademacher";
  }
  return "gauss";
}

namespace {

Matrix draw_design(std::size_t n, std::size_t p, Design design, Rng& rng) {
  Matrix x(n, p);
  switch (design) {
    case Design::gauss:
      for (double& v : x.data()) v = rng.normal();
      break;
    case Design::rademacher:
      for (double& v : x.data()) v = rng.rademacher();
      break;
    case Design::ar_toeplitz: {
      // Stationary AR(1) across coordinates has covariance phi^|i-j|.
      const double innovation = std::sqrt(1.0 - kArCoefficient * kArCoefficient);
      for (std::size_t t = 0; t < n; ++t) {
        auto row = x.row(t);
        row[0] = rng.normal();
        for (std::size_t j = 1; j < p; ++j)
          row[j] = kArCoefficient * row[j - 1] + innovation * rng.normal();
      }
      break;
    }
  }
  return x;
}

// Zero-mean, unit-variance draw.
double draw_noise(Noise noise, Rng& rng) {
  switch (noise) {
    case Noise::gauss: return rng.normal();
    case Noise::t4: return rng.student_t(4) / std::sqrt(2.0);
    case Noise::t6: return rng.student_t(6) / std::sqrt(1.5);
    case Noise::exp_centered: return rng.exponential() - 1.0;
    case Noise::rademacher: return rng.rademacher();
  }
  return 0.0;
}

Vector draw_sparse_change(std::size_t p, std::size_t k, double rho, Rng& rng) {
  std::vector<std::size_t> index(p);
  std::iota(index.begin(), index.end(), 0);
  for (std::size_t i = 0; i < k; ++i) std::swap(index[i], index[i + rng.below(p - i)]);
  Vector theta(p, 0.0);
  if (rho == 0.0) return theta;
  double sq = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double v = rng.normal();
    theta[index[i]] = v;
    sq += v * v;
  }
  const double scale = rho / std::sqrt(sq);
  for (double& v : theta) v *= scale;
  return theta;
}

void fill_response(const Matrix& x, const std::vector<Vector>& betas,
                   const std::vector<std::size_t>& changepoints, double sigma, Noise noise,
                   Rng& rng, Vector& y) {
  std::size_t segment = 0;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    while (segment < changepoints.size() && t >= changepoints[segment]) ++segment;
    y[t] = dot(x.row(t), betas[segment]);
  }
  if (sigma != 0.0)
    for (double& v : y) v += sigma * draw_noise(noise, rng);
}

void check_dimensions(std::size_t n, std::size_t p, std::size_t k, double sigma) {
  if (n < 2 || p < 1) throw ConfigError("simulation needs n >= 2 and p >= 1");
  if (k < 1 || k > p) throw ConfigError("sparsity k must lie in [1, p]");
  if (!(sigma >= 0.0)) throw ConfigError("noise scale must be non-negative");
}

}  // namespace

SingleInstance generate_single(const SimConfig& cfg) {
  check_dimensions(cfg.n, cfg.p, cfg.k, cfg.sigma);
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (!(cfg.rho >= 0.0)) throw ConfigError("rho must be non-negative");
  const auto z = static_cast<std::size_t>(std::llround(cfg.tau * static_cast<double>(cfg.n)));
  if (z < 1 || z >= cfg.n) throw ConfigError("round(tau n) must lie in [1, n-1]");

  Rng rng(cfg.seed);
  SingleInstance out;
  out.z = z;
  out.theta = draw_sparse_change(cfg.p, cfg.k, cfg.rho, rng);
  const double beta_sd = std::max(1.0, cfg.rho);
  out.beta_pre.resize(cfg.p);
  for (double& v : out.beta_pre) v = beta_sd * rng.normal();
  Vector beta_post = out.beta_pre;
  axpy(-2.0, out.theta, beta_post);

  Matrix x = draw_design(cfg.n, cfg.p, cfg.design, rng);
  Vector y(cfg.n);
  fill_response(x, {out.beta_pre, beta_post}, {z}, cfg.sigma, cfg.noise, rng, y);
  out.data = RegressionData(std::move(x), std::move(y));
  return out;
}

MultiInstance generate_multi(const MultiSpec& spec) {
  check_dimensions(spec.n, spec.p, spec.k, spec.sigma);
  if (spec.changepoints.size() != spec.magnitudes.size())
    throw ConfigError("one magnitude per changepoint is required");
  for (std::size_t i = 0; i < spec.changepoints.size(); ++i) {
    const std::size_t c = spec.changepoints[i];
    if (c < 1 || c >= spec.n || (i > 0 && c <= spec.changepoints[i - 1]))
      throw ConfigError("changepoints must be strictly increasing inside (0, n)");
    if (!(spec.magnitudes[i] >= 0.0)) throw ConfigError("magnitudes must be non-negative");
  }

  Rng rng(spec.seed);
  MultiInstance out;
  out.changepoints = spec.changepoints;
  for (double rho : spec.magnitudes) out.thetas.push_back(draw_sparse_change(spec.p, spec.k, rho, rng));
  double largest = 1.0;
  for (double rho : spec.magnitudes) largest = std::max(largest, rho);
  std::vector<Vector> betas(1, Vector(spec.p));
  for (double& v : betas[0]) v = largest * rng.normal();
  for (const Vector& theta : out.thetas) {
    Vector next = betas.back();
    axpy(-2.0, theta, next);
    betas.push_back(std::move(next));
  }

  Matrix x = draw_design(spec.n, spec.p, spec.design, rng);
  Vector y(spec.n);
  fill_response(x, betas, spec.changepoints, spec.sigma, spec.noise, rng, y);
  out.data = RegressionData(std::move(x), std::move(y));
  return out;
}

MultiSpec preset_m1(double rho_min, std::uint64_t seed) {
  MultiSpec s;
  s.n = 1200;
  s.p = 200;
  s.changepoints = {240, 540, 900};
  s.magnitudes = {rho_min, 1.5 * rho_min, 2.0 * rho_min};
  s.seed = seed;
  return s;
}

MultiSpec preset_m2(double rho_min, std::uint64_t seed) {
  MultiSpec s;
  s.n = 2400;
  s.p = 400;
  s.changepoints = {720, 1320, 1800, 2160};
  s.magnitudes = {rho_min, 1.15 * rho_min, 1.45 * rho_min, 2.18 * rho_min};
  s.seed = seed;
  return s;
}

double effective_snr(const MultiSpec& spec, std::size_t i) {
  if (i >= spec.changepoints.size()) throw DimensionError("changepoint index out of range");
  const double prev = i == 0 ? 0.0 : static_cast<double>(spec.changepoints[i - 1]);
  const double next = i + 1 == spec.changepoints.size() ? static_cast<double>(spec.n)
                                                        : static_cast<double>(spec.changepoints[i + 1]);
  const double z = static_cast<double>(spec.changepoints[i]);
  const double rho = spec.magnitudes[i];
  const double span = next - prev;
  return rho * rho * (z - prev) * (next - z) * (span - static_cast<double>(spec.p)) / (span * span);
}

double hausdorff(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                 std::size_t n) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return static_cast<double>(n);
  auto directed = [](const std::vector<std::size_t>& from, const std::vector<std::size_t>& to) {
    double worst = 0.0;
    for (std::size_t x : from) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t y : to)
        best = std::min(best, std::abs(static_cast<double>(x) - static_cast<double>(y)));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

namespace {

std::vector<std::size_t> segment_lengths(const std::vector<std::size_t>& cps, std::size_t n) {
  std::vector<std::size_t> out;
  std::size_t prev = 0;
  for (std::size_t c : cps) {
    if (c <= prev || c >= n) throw DimensionError("changepoints must be sorted inside (0, n)");
    out.push_back(c - prev);
    prev = c;
  }
  out.push_back(n - prev);
  return out;
}

double pairs(double count) { return 0.5 * count * (count - 1.0); }

}  // namespace

double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                           std::size_t n) {
  if (n < 2) throw DimensionError("ARI needs n >= 2");
  const auto la = segment_lengths(a, n);
  const auto lb = segment_lengths(b, n);

  // Overlaps of consecutive segments by a merge over both boundary lists.
  double sum_ij = 0.0;
  std::size_t i = 0, j = 0, start = 0, end_a = la[0], end_b = lb[0];
  while (start < n) {
    const std::size_t end = std::min(end_a, end_b);
    sum_ij += pairs(static_cast<double>(end - start));
    start = end;
    if (end == end_a && ++i < la.size()) end_a += la[i];
    if (end == end_b && ++j < lb.size()) end_b += lb[j];
  }
  double sum_a = 0.0, sum_b = 0.0;
  for (std::size_t len : la) sum_a += pairs(static_cast<double>(len));
  for (std::size_t len : lb) sum_b += pairs(static_cast<double>(len));
  const double expected = sum_a * sum_b / pairs(static_cast<double>(n));
  const double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) return a == b ? 1.0 : 0.0;
  return (sum_ij - expected) / (maximum - expected);
}

}  // namespace charcoal
