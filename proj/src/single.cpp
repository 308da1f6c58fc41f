#include "charcoal/single.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <string>

#include "charcoal/error.hpp"
#include "charcoal/parallel.hpp"
#include "charcoal/rng.hpp"

namespace charcoal {

double default_lambda(std::size_t p, double sigma_tilde) {
  if (p < 2) throw ConfigError("default lambda needs p >= 2");
  if (!(sigma_tilde > 0.0)) throw ConfigError("default lambda needs a positive noise scale");
  return 0.5 * sigma_tilde * std::log(static_cast<double>(p));
}

namespace {

std::size_t argmax_first(const Vector& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// Euclidean norm of each column of f(Q).
template <typename F>
Vector column_norms(const QMatrix& q, F&& f) {
  Vector sq(q.length(), 0.0);
  for (std::size_t j = 0; j < q.stats.rows(); ++j) {
    const auto row = q.stats.row(j);
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double v = f(row[c]);
      sq[c] += v * v;
    }
  }
  for (double& v : sq) v = std::sqrt(v);
  return sq;
}

Vector soft_trace(const QMatrix& q, double lam) {
  return column_norms(q, [lam](double v) { return soft_threshold(v, lam); });
}

void require_nonempty(const QMatrix& q) {
  if (q.stats.empty()) throw DimensionError("empty Q matrix");
}

}  // namespace

SingleEstimate estimate_threshold_argmax(const QMatrix& q, double lam, ThresholdMode mode) {
  require_nonempty(q);
  SingleEstimate est;
  est.window = q.window;
  if (mode == ThresholdMode::soft) {
    est.trace = soft_trace(q, lam);
  } else {
    est.trace = column_norms(q, [lam](double v) { return hard_threshold(v, lam); });
  }
  est.location = q.time_at(argmax_first(est.trace));
  est.h_max = mode == ThresholdMode::soft ? *std::max_element(est.trace.begin(), est.trace.end())
                                          : soft_h_max(q, lam);
  return est;
}

double soft_h_max(const QMatrix& q, double lam) {
  require_nonempty(q);
  const Vector trace = soft_trace(q, lam);
  return *std::max_element(trace.begin(), trace.end());
}

double normalised_h_max(const QMatrix& q, double lam_coef, std::optional<double> sigma) {
  if (!(lam_coef >= 0.0)) throw ConfigError("lambda coefficient must be non-negative");
  const double s = sigma ? *sigma : estimate_sigma_mad(q);
  if (!(s > 0.0)) return 0.0;
  const double p = static_cast<double>(q.stats.rows());
  return soft_h_max(q, lam_coef * s * std::log(p)) / s;
}

SingleEstimate estimate_proj(const QMatrix& q, double lam, std::uint64_t seed) {
  require_nonempty(q);
  SingleEstimate est;
  est.window = q.window;
  const Vector soft_norms = soft_trace(q, lam);
  const double h = *std::max_element(soft_norms.begin(), soft_norms.end());
  est.h_max = h;
  if (h == 0.0) {
    est.fallback = true;
    est.trace = soft_norms;
    est.location = q.time_at(argmax_first(soft_norms));
    return est;
  }
  const SingularVector sv = leading_left_singular_vector(soft_threshold(q.stats, lam), seed);
  est.trace = multiply_transposed(q.stats, sv.vector);
  for (double& v : est.trace) v = std::abs(v);
  est.location = q.time_at(argmax_first(est.trace));
  est.direction = sv.vector;
  return est;
}

double bic_score(double rss, std::size_t support, std::size_t m) {
  return -(rss + static_cast<double>(support) * std::log(static_cast<double>(m)));
}

namespace {

double quadratic_rss(double z_sq, std::span<const double> corr, const Matrix& gram,
                     const Vector& v) {
  double quad = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    quad += v[i] * dot(gram.row(i), v);
  }
  return std::max(0.0, z_sq - 2.0 * dot(corr, v) + quad);
}

std::size_t support_size(const Vector& v) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return x != 0.0; }));
}

// Solves at `lam`, short-circuiting the all-zero solution. A fit that runs
// out of sweeps keeps its last iterate and bumps `unconverged`.
Vector solve_penalised(const Matrix& gram, std::span<const double> corr, double rows, double lam,
                       Vector warm, const LassoOptions& options, std::size_t& unconverged) {
  if (max_abs(corr) <= lam * rows) return Vector(corr.size(), 0.0);
  try {
    return lasso_cd_gram(gram, corr, rows, lam, std::move(warm), options);
  } catch (const ConvergenceError& e) {
    ++unconverged;
    return e.last_iterate();
  }
}

double universal_lambda(const LassoStrategy& s, double sigma, std::span<const double> diagonal,
                        std::size_t m, double lam_max) {
  const std::size_t p = diagonal.size();
  const double mean_diag =
      std::accumulate(diagonal.begin(), diagonal.end(), 0.0) / static_cast<double>(p);
  const double lam = s.universal_c * sigma * std::sqrt(2.0 * std::log(static_cast<double>(p))) *
                     std::sqrt(std::max(0.0, mean_diag)) / static_cast<double>(m);
  // Noise-free data would give lam = 0; keep the problem strictly convex.
  return std::max(lam, 1e-6 * lam_max);
}

SingleEstimate lasso_bic_streamed(const RegressionData& data, const TimeWindow& window,
                                  const LassoStrategy& strategy, const LassoOptions& options) {
  ImplicitSketch stream(data, ImplicitSketch::Track::full);
  const std::size_t m = stream.m();
  const double rows = static_cast<double>(m);

  double sigma = 0.0;
  if (strategy.kind == LassoStrategy::Kind::universal) {
    sigma = strategy.sigma ? *strategy.sigma
                           : estimate_sigma_mad(q_matrix(data, 0.0, QVariant::diag));
    if (!(sigma >= 0.0)) throw ConfigError("noise scale must be non-negative");
  }

  SingleEstimate est;
  est.window = window;
  est.trace.assign(window.size(), 0.0);
  Vector theta(data.p(), 0.0);
  while (stream.time() < window.hi) {
    stream.advance();
    const std::size_t t = stream.time();
    if (t < window.lo) continue;
    const std::size_t c = t - window.lo;
    const auto corr = stream.correlation();
    const double lam_max = max_abs(corr) / rows;
    double lam = 0.0;
    if (strategy.kind == LassoStrategy::Kind::fixed) {
      lam = strategy.lambdas.size() == 1 ? strategy.lambdas[0] : strategy.lambdas[c];
    } else {
      lam = universal_lambda(strategy, sigma, stream.gram_diagonal(), m, lam_max);
    }
    if (lam_max == 0.0) {
      std::fill(theta.begin(), theta.end(), 0.0);
    } else {
      theta = solve_penalised(stream.gram(), corr, rows, lam, std::move(theta), options, est.unconverged);
    }
    est.trace[c] = bic_score(quadratic_rss(stream.response_norm_sq(), corr, stream.gram(), theta),
                             support_size(theta), m);
  }
  est.location = window.lo + argmax_first(est.trace);
  return est;
}

constexpr std::size_t kFolds = 5;
constexpr std::size_t kGridSize = 50;

// Cross-validation needs per-fold Gram matrices of the sketched design, so
// this route carries the explicit basis A. The fold quantities are updated
// by the same rank-one recursion as W_t itself:
//   G_F += 2 (x u^T + u x^T) + 4 |a_F|^2 x x^T,  u = W_{t-1,F}^T a_F
//   c_F += 2 (a_F^T Z_F) x.
SingleEstimate lasso_bic_cv(const RegressionData& data, const TimeWindow& window,
                            const LassoStrategy& strategy, const LassoOptions& options) {
  const SketchedData sk = sketch(data);
  const std::size_t m = sk.m();
  const std::size_t p = data.p();
  if (m < kFolds) throw DimensionError("five-fold cross-validation needs n - p >= 5");

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(strategy.seed);
  for (std::size_t i = m; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::vector<std::size_t>> folds(kFolds);
  for (std::size_t i = 0; i < m; ++i) folds[i % kFolds].push_back(order[i]);

  std::vector<Matrix> fold_gram(kFolds, Matrix(p, p));
  std::vector<Vector> fold_corr(kFolds, Vector(p, 0.0));
  Vector fold_z_sq(kFolds, 0.0);
  for (std::size_t f = 0; f < kFolds; ++f)
    for (std::size_t i : folds[f]) fold_z_sq[f] += sk.response[i] * sk.response[i];
  const double z_sq = std::accumulate(fold_z_sq.begin(), fold_z_sq.end(), 0.0);

  Matrix w(m, p);
  Matrix gram(p, p);
  Vector corr(p);
  Vector u(p);
  SingleEstimate est;
  est.window = window;
  est.trace.assign(window.size(), 0.0);
  Vector theta(p, 0.0);

  for (std::size_t t = 1; t <= window.hi; ++t) {
    const auto a = sk.basis.row(t - 1);
    const auto x = data.design.row(t - 1);
    for (std::size_t f = 0; f < kFolds; ++f) {
      std::fill(u.begin(), u.end(), 0.0);
      double a_sq = 0.0, az = 0.0;
      for (std::size_t i : folds[f]) {
        if (a[i] == 0.0) continue;
        axpy(a[i], w.row(i), u);
        a_sq += a[i] * a[i];
        az += a[i] * sk.response[i];
      }
      Matrix& g = fold_gram[f];
      for (std::size_t r = 0; r < p; ++r) {
        auto row = g.row(r);
        axpy(2.0 * u[r] + 4.0 * a_sq * x[r], x, row);
        axpy(2.0 * x[r], u, row);
      }
      axpy(2.0 * az, x, fold_corr[f]);
    }
    for (std::size_t i = 0; i < m; ++i)
      if (a[i] != 0.0) axpy(2.0 * a[i], x, w.row(i));
    if (t < window.lo) continue;

    std::fill(gram.data().begin(), gram.data().end(), 0.0);
    std::fill(corr.begin(), corr.end(), 0.0);
    for (std::size_t f = 0; f < kFolds; ++f) {
      axpy(1.0, fold_gram[f].data(), gram.data());
      axpy(1.0, fold_corr[f], corr);
    }
    const double rows = static_cast<double>(m);
    const double lam_max = max_abs(corr) / rows;
    const std::size_t c = t - window.lo;
    if (lam_max == 0.0) {
      std::fill(theta.begin(), theta.end(), 0.0);
      est.trace[c] = bic_score(z_sq, 0, m);
      continue;
    }

    Vector grid(kGridSize);
    for (std::size_t g = 0; g < kGridSize; ++g)
      grid[g] = lam_max * std::pow(1e-3, static_cast<double>(g) / (kGridSize - 1));
    Vector cv_error(kGridSize, 0.0);
    for (std::size_t f = 0; f < kFolds; ++f) {
      Matrix train_gram = gram;
      axpy(-1.0, fold_gram[f].data(), train_gram.data());
      Vector train_corr = corr;
      axpy(-1.0, fold_corr[f], train_corr);
      const double train_rows = static_cast<double>(m - folds[f].size());
      Vector path(p, 0.0);
      for (std::size_t g = 0; g < kGridSize; ++g) {
        path = solve_penalised(train_gram, train_corr, train_rows, grid[g], std::move(path), options,
                               est.unconverged);
        cv_error[g] += quadratic_rss(fold_z_sq[f], fold_corr[f], fold_gram[f], path);
      }
    }
    const std::size_t best = static_cast<std::size_t>(
        std::min_element(cv_error.begin(), cv_error.end()) - cv_error.begin());
    theta = solve_penalised(gram, corr, rows, grid[best], std::move(theta), options, est.unconverged);
    est.trace[c] = bic_score(quadratic_rss(z_sq, corr, gram, theta), support_size(theta), m);
  }
  est.location = window.lo + argmax_first(est.trace);
  return est;
}

}  // namespace

SingleEstimate estimate_lasso_bic(const RegressionData& data, double alpha,
                                  const LassoStrategy& strategy, const LassoOptions& options) {
  if (data.n() <= data.p()) {
    throw DimensionError("Lasso-BIC needs n > p for the sketch (got n=" +
                         std::to_string(data.n()) + ", p=" + std::to_string(data.p()) + ")");
  }
  const TimeWindow window = burn_in_window(data.n(), alpha);
  if (strategy.kind == LassoStrategy::Kind::fixed) {
    if (strategy.lambdas.size() != 1 && strategy.lambdas.size() != window.size())
      throw ConfigError("fixed Lasso penalties must have one entry or one per window time");
    for (double lam : strategy.lambdas)
      if (!(lam > 0.0)) throw ConfigError("fixed Lasso penalties must be positive");
  }
  if (strategy.kind == LassoStrategy::Kind::cv5) return lasso_bic_cv(data, window, strategy, options);
  return lasso_bic_streamed(data, window, strategy, options);
}

int single_test(const RegressionData& data, const TestConfig& cfg, QVariant variant) {
  if (data.n() < data.p() + 2) return 0;
  try {
    const QMatrix q = q_matrix(data, cfg.alpha, variant);
    return soft_h_max(q, cfg.lam) >= cfg.threshold ? 1 : 0;
  } catch (const RankError&) {
    return 0;
  }
}

// ---------------------------------------------------------------------------

double GevParams::quantile(double u) const {
  const double y = -std::log(u);
  if (std::abs(shape) < 1e-8) return location - scale * std::log(y);
  return location + scale * (std::pow(y, -shape) - 1.0) / shape;
}

GevParams fit_gev(std::vector<double> samples) {
  const std::size_t n = samples.size();
  if (n < 20) throw DegenerateInputError("GEV fit needs at least 20 samples");
  std::sort(samples.begin(), samples.end());
  if (samples.front() == samples.back()) throw DegenerateInputError("GEV fit of a constant sample");

  // Unbiased probability-weighted moments b_r.
  const double nd = static_cast<double>(n);
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double k = static_cast<double>(i);
    b0 += samples[i];
    b1 += k / (nd - 1.0) * samples[i];
    b2 += k * (k - 1.0) / ((nd - 1.0) * (nd - 2.0)) * samples[i];
  }
  b0 /= nd;
  b1 /= nd;
  b2 /= nd;
  const double l1 = b0;
  const double l2 = 2.0 * b1 - b0;
  const double l3 = 6.0 * b2 - 6.0 * b1 + b0;
  if (!(l2 > 0.0)) throw DegenerateInputError("GEV fit: non-positive L-scale");
  const double t3 = l3 / l2;

  // Hosking's rational approximation for the shape.
  const double c = 2.0 / (3.0 + t3) - std::log(2.0) / std::log(3.0);
  const double k = 7.8590 * c + 2.9554 * c * c;
  GevParams g;
  if (std::abs(k) < 1e-8) {
    g.scale = l2 / std::log(2.0);
    g.location = l1 - 0.57721566490153286 * g.scale;
    g.shape = 0.0;
  } else {
    const double gam = std::tgamma(1.0 + k);
    g.scale = l2 * k / ((1.0 - std::pow(2.0, -k)) * gam);
    g.location = l1 - g.scale * (1.0 - gam) / k;
    g.shape = -k;
  }
  if (!std::isfinite(g.shape) || !std::isfinite(g.location) || !std::isfinite(g.scale) ||
      !(g.scale > 0.0)) {
    throw DegenerateInputError("GEV fit produced invalid parameters");
  }
  return g;
}

double empirical_quantile(std::vector<double> samples, double u) {
  if (samples.empty()) throw DimensionError("quantile of an empty sample");
  std::sort(samples.begin(), samples.end());
  const double pos = std::clamp(u, 0.0, 1.0) * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return samples[lo] + frac * (samples[hi] - samples[lo]);
}

Calibration calibrate_threshold(const CalibrationConfig& cfg) {
  if (cfg.B < 50) throw ConfigError("calibration needs B >= 50 null replicates");
  if (cfg.M < 1) throw ConfigError("calibration needs M >= 1");
  if (cfg.p < 2) throw ConfigError("calibration needs p >= 2");
  if (cfg.n < cfg.p + 2) throw ConfigError("calibration needs n >= p + 2");
  const double level = cfg.level.value_or(0.01 / static_cast<double>(cfg.M));
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("calibration level must lie in (0, 1)");
  burn_in_window(cfg.n, cfg.alpha);  // validates alpha

  if (!(cfg.lam_coef >= 0.0)) throw ConfigError("lambda coefficient must be non-negative");
  const std::optional<double> sigma = cfg.plug_in_sigma ? std::nullopt : std::optional<double>(1.0);
  Calibration out;
  out.level = level;
  out.samples.assign(cfg.B, 0.0);
  parallel_for(cfg.B, resolve_threads(cfg.threads), [&](std::size_t b) {
    Rng rng(derive_seed(cfg.seed, b));
    Matrix x(cfg.n, cfg.p);
    for (double& v : x.data()) v = rng.normal();
    Vector beta(cfg.p);
    for (double& v : beta) v = rng.normal();
    Vector y = multiply(x, beta);
    for (double& v : y) v += rng.normal();
    const RegressionData data(std::move(x), std::move(y));
    out.samples[b] = normalised_h_max(q_matrix(data, cfg.alpha, QVariant::diag), cfg.lam_coef, sigma);
  });

  double threshold = 0.0;
  try {
    const GevParams g = fit_gev(out.samples);
    threshold = g.quantile(1.0 - level);
    if (!std::isfinite(threshold)) throw DegenerateInputError("non-finite GEV quantile");
    out.gev = g;
  } catch (const DegenerateInputError&) {
    out.gev.reset();
    threshold = empirical_quantile(out.samples, 1.0 - level);
  }
  out.threshold = std::max(threshold, DBL_MIN);
  return out;
}

}  // namespace charcoal
