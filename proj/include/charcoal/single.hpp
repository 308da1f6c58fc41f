#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "charcoal/linalg.hpp"
#include "charcoal/sketch.hpp"

namespace charcoal {

struct SingleEstimate {
  std::size_t location = 0;
  // max_t ||soft(Q_t, lam)||_2 over the window; absent for Lasso-BIC.
  std::optional<double> h_max;
  std::optional<Vector> direction;
  TimeWindow window;
  // Scanned statistic for t = window.lo .. window.hi.
  Vector trace;
  // Projection estimate fell back to the soft trace because soft(Q) was zero.
  bool fallback = false;
  // Lasso-BIC fits that hit the sweep limit; their last iterate is scored.
  std::size_t unconverged = 0;
};

// 0.5 sigma ln p
double default_lambda(std::size_t p, double sigma_tilde);

enum class ThresholdMode { hard, soft };

// argmax_t ||hard/soft(Q_t, lam)||_2, smallest t on ties.
SingleEstimate estimate_threshold_argmax(const QMatrix& q, double lam, ThresholdMode mode);

// max_t ||soft(Q_t, lam)||_2
double soft_h_max(const QMatrix& q, double lam);

// H_max at lam = lam_coef * s * ln p, divided by s, where s is `sigma` or,
// when absent, the MAD estimate from the entries of q. Zero when s = 0.
double normalised_h_max(const QMatrix& q, double lam_coef, std::optional<double> sigma = {});

// Projection estimator: v = leading left singular vector of soft(Q, lam),
// location = argmax_t |v^T Q_t|.
SingleEstimate estimate_proj(const QMatrix& q, double lam, std::uint64_t seed);

// How the per-t Lasso penalties are chosen.
struct LassoStrategy {
  enum class Kind {
    // lam_t = c sigma sqrt(2 ln p) sqrt(mean_j (W_t^T W_t)_jj) / m, the
    // universal noise level of the scaled correlations W_t^T xi / m.
    universal,
    // Caller-supplied penalties, one per window time or a single value.
    fixed,
    // Five-fold cross-validation over a 50-point geometric grid.
    cv5,
  };
  Kind kind = Kind::universal;
  double universal_c = 1.0;
  // Noise scale for the universal rule; estimated by MAD of Q when absent.
  std::optional<double> sigma;
  Vector lambdas;
  std::uint64_t seed = 0;
};

// -(rss + support ln m)
double bic_score(double rss, std::size_t support, std::size_t m);

// Lasso-BIC estimator. The trace holds H_t.
SingleEstimate estimate_lasso_bic(const RegressionData& data, double alpha,
                                  const LassoStrategy& strategy, const LassoOptions& options = {});

struct TestConfig {
  double alpha = 0.0;
  double lam = 0.0;
  double threshold = 1.0;
};

// 1{max_t ||soft(Q_t, lam)||_2 >= threshold}; 0 whenever n - p < 2 or the
// window would be empty.
int single_test(const RegressionData& data, const TestConfig& cfg,
                QVariant variant = QVariant::diag);

// Generalised extreme value law with F(x) = exp(-(1 + shape (x - location) / scale)^(-1/shape)).
struct GevParams {
  double location = 0.0;
  double scale = 1.0;
  double shape = 0.0;

  double quantile(double u) const;
};

// Method of L-moments. Throws DegenerateInputError for fewer than 20
// samples, a constant sample, or a non-finite fit.
GevParams fit_gev(std::vector<double> samples);

// Linear-interpolation sample quantile (type 7).
double empirical_quantile(std::vector<double> samples, double u);

struct CalibrationConfig {
  std::size_t n = 0;
  std::size_t p = 0;
  double alpha = 0.05;
  double lam_coef = 0.5;
  std::size_t B = 1000;
  std::size_t M = 200;
  // Upper tail probability; 0.01 / M when absent.
  std::optional<double> level;
  // Normalise each replicate by its own MAD noise estimate (the statistic
  // used when the noise level is unknown) rather than by the true unit scale.
  bool plug_in_sigma = true;
  std::uint64_t seed = 0;
  std::optional<std::size_t> threads;
};

struct Calibration {
  // Threshold for normalised_h_max.
  double threshold = 0.0;
  double level = 0.0;
  std::optional<GevParams> gev;
  std::vector<double> samples;
};

// Simulates B change-free datasets with N(0,1) design, noise and
// coefficients, records normalised_h_max, and returns the upper `level`
// quantile of a GEV fit (empirical quantile when the fit fails).
Calibration calibrate_threshold(const CalibrationConfig& cfg);

}  // namespace charcoal
