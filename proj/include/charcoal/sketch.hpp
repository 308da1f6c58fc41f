#pragma once

#include <cstddef>
#include <span>

#include "charcoal/linalg.hpp"

namespace charcoal {

// Design X (n x p) with response Y (n); row t-1 holds time point t.
struct RegressionData {
  Matrix design;
  Vector response;

  RegressionData() = default;
  RegressionData(Matrix x, Vector y);

  std::size_t n() const noexcept { return design.rows(); }
  std::size_t p() const noexcept { return design.cols(); }

  // Time points (begin, end], i.e. rows begin .. end-1.
  RegressionData slice(std::size_t begin, std::size_t end) const;
};

// Complementary sketch: A spans the orthogonal complement of col(X), Z = A^T Y.
struct SketchedData {
  Matrix basis;
  Vector response;

  std::size_t m() const noexcept { return basis.cols(); }
};

SketchedData sketch(const RegressionData& data);

enum class QVariant { diag, primed };

// Scan range [lo, hi] of hypothesised change times after burn-in.
struct TimeWindow {
  std::size_t lo = 1;
  std::size_t hi = 1;

  std::size_t size() const noexcept { return hi - lo + 1; }
  bool contains(std::size_t t) const noexcept { return t >= lo && t <= hi; }
};

// [max(1, floor(alpha n)), min(n-1, ceil((1-alpha) n))]; alpha in [0, 1/2), n >= 2.
TimeWindow burn_in_window(std::size_t n, double alpha);

// Per-time correlation statistics; column j of `stats` is Q_{window.lo + j}.
struct QMatrix {
  Matrix stats;
  TimeWindow window;
  QVariant variant = QVariant::diag;
  // Entries zeroed because diag(W_t^T W_t) fell below the guard.
  std::size_t degenerate = 0;

  std::size_t length() const noexcept { return stats.cols(); }
  std::size_t time_at(std::size_t column) const noexcept { return window.lo + column; }
  Vector column(std::size_t j) const { return stats.column(j); }
};

inline constexpr double kDiagonalGuard = 1e-12;

// Streams W_t = W_{t-1} + 2 a_t x_t^T through the explicit basis of `sk`,
// carrying W_t^T Z and the column norms of W_t.
QMatrix q_matrix(const RegressionData& data, const SketchedData& sk, double alpha,
                 QVariant variant);

// Same statistics without forming A, via ImplicitSketch. This is the route
// the estimators use.
QMatrix q_matrix(const RegressionData& data, double alpha, QVariant variant);

// Streams W_t^T Z and W_t^T W_t over t = 1, ..., n-1 without the basis A.
//
// With r = (I - H) Y the least-squares residual and S_t = X_(0,t]^T X_(0,t],
//   W_t^T Z   = 2 sum_{s<=t} r_s x_s
//   W_t^T W_t = 4 (S_t - S_t S^{-1} S_t),
// and S_t S^{-1} S_t = V_t^T V_t with V_t = R^{-T} S_t updated by rank one
// per step. Cost O(p^2) per step after an O(n p^2) QR of X.
class ImplicitSketch {
 public:
  enum class Track { diagonal, full };

  // Throws DimensionError when n <= p and RankError when X is rank deficient.
  ImplicitSketch(const RegressionData& data, Track track);

  std::size_t n() const noexcept { return n_; }
  std::size_t p() const noexcept { return p_; }
  std::size_t m() const noexcept { return n_ - p_; }
  std::size_t time() const noexcept { return t_; }

  // ||Z||^2, which equals the residual sum of squares of Y on X.
  double response_norm_sq() const noexcept { return response_norm_sq_; }

  // Moves from time t to t+1 (requires t+1 <= n-1).
  void advance();

  std::span<const double> correlation() const noexcept { return correlation_; }
  std::span<const double> gram_diagonal() const noexcept { return diagonal_; }
  // Full W_t^T W_t; only maintained with Track::full.
  const Matrix& gram() const noexcept { return gram_; }

 private:
  const RegressionData* data_;
  std::size_t n_;
  std::size_t p_;
  Track track_;
  std::size_t t_ = 0;
  HouseholderQR qr_;
  Vector residual_;
  double response_norm_sq_ = 0.0;
  Matrix v_;
  Vector correlation_;
  Vector diagonal_;
  Matrix gram_;
  Vector w_;
  Vector q_;
};

// 1.4826 * median |q_ij - median(q)| over all entries.
double estimate_sigma_mad(const QMatrix& q);

// E-proxy of W_t^T W_z: 4 t (n-z)(n-p)/n^2 for t <= z, 4 z (n-t)(n-p)/n^2 after.
double g_expected(std::size_t t, std::size_t z, std::size_t n, std::size_t p);

// CUSUM-shaped signal curve g(t; z) sqrt(n / (t (n-t))); maximised at t = z.
double gamma_oracle(std::size_t t, std::size_t z, std::size_t n, std::size_t p);

}  // namespace charcoal
