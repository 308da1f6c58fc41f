#include "charcoal/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "charcoal/error.hpp"

namespace charcoal {

RegressionData::RegressionData(Matrix x, Vector y) : design(std::move(x)), response(std::move(y)) {
  if (design.rows() != response.size()) {
    throw DimensionError("design has " + std::to_string(design.rows()) +
                         " rows but response has " + std::to_string(response.size()) +
                         " entries");
  }
}

RegressionData RegressionData::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > n()) throw DimensionError("slice out of range");
  return RegressionData(row_block(design, begin, end),
                        Vector(response.begin() + static_cast<std::ptrdiff_t>(begin),
                               response.begin() + static_cast<std::ptrdiff_t>(end)));
}

SketchedData sketch(const RegressionData& data) {
  SketchedData out;
  out.basis = complement_basis(data.design);
  out.response = multiply_transposed(out.basis, data.response);
  return out;
}

TimeWindow burn_in_window(std::size_t n, double alpha) {
  if (n < 2) throw DimensionError("burn-in window needs n >= 2");
  if (!(alpha >= 0.0 && alpha < 0.5)) throw ConfigError("burn-in fraction must lie in [0, 1/2)");
  constexpr double eps = 1e-9;
  const double nd = static_cast<double>(n);
  const auto lo = static_cast<std::size_t>(std::floor(alpha * nd + eps));
  const auto hi = static_cast<std::size_t>(std::ceil((1.0 - alpha) * nd - eps));
  return {std::max<std::size_t>(1, lo), std::min(n - 1, hi)};
}

namespace {

void fill_column(QMatrix& q, std::size_t column, std::size_t t, std::size_t n,
                 std::span<const double> correlation, std::span<const double> diagonal) {
  const std::size_t p = correlation.size();
  if (q.variant == QVariant::primed) {
    const double td = static_cast<double>(t);
    const double nd = static_cast<double>(n);
    const double scale = std::sqrt(nd / (td * (nd - td)));
    for (std::size_t j = 0; j < p; ++j) q.stats(j, column) = scale * correlation[j];
    return;
  }
  for (std::size_t j = 0; j < p; ++j) {
    if (diagonal[j] < kDiagonalGuard) {
      q.stats(j, column) = 0.0;
      ++q.degenerate;
    } else {
      q.stats(j, column) = correlation[j] / std::sqrt(diagonal[j]);
    }
  }
}

HouseholderQR checked_qr(const RegressionData& data) {
  if (data.n() <= data.p()) {
    throw DimensionError("sketching needs n > p (got n=" + std::to_string(data.n()) +
                         ", p=" + std::to_string(data.p()) + ")");
  }
  HouseholderQR qr(data.design);
  qr.require_full_rank();
  return qr;
}

}  // namespace

QMatrix q_matrix(const RegressionData& data, const SketchedData& sk, double alpha,
                 QVariant variant) {
  const std::size_t n = data.n();
  const std::size_t p = data.p();
  const std::size_t m = sk.m();
  if (sk.basis.rows() != n || sk.response.size() != m)
    throw DimensionError("sketch does not match the regression data");

  QMatrix q;
  q.window = burn_in_window(n, alpha);
  q.variant = variant;
  q.stats = Matrix(p, q.window.size());

  Matrix w(m, p);
  Vector correlation(p, 0.0);
  Vector diagonal(p, 0.0);
  Vector projected(p);
  for (std::size_t t = 1; t <= q.window.hi; ++t) {
    const auto a = sk.basis.row(t - 1);
    const auto x = data.design.row(t - 1);
    // projected = W_{t-1}^T a_t
    std::fill(projected.begin(), projected.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i)
      if (a[i] != 0.0) axpy(a[i], w.row(i), projected);
    const double a_sq = dot(a, a);
    for (std::size_t j = 0; j < p; ++j)
      diagonal[j] += 4.0 * x[j] * projected[j] + 4.0 * x[j] * x[j] * a_sq;
    axpy(2.0 * dot(a, sk.response), x, correlation);
    for (std::size_t i = 0; i < m; ++i)
      if (a[i] != 0.0) axpy(2.0 * a[i], x, w.row(i));
    if (t >= q.window.lo) fill_column(q, t - q.window.lo, t, n, correlation, diagonal);
  }
  return q;
}

QMatrix q_matrix(const RegressionData& data, double alpha, QVariant variant) {
  ImplicitSketch stream(data, ImplicitSketch::Track::diagonal);
  QMatrix q;
  q.window = burn_in_window(data.n(), alpha);
  q.variant = variant;
  q.stats = Matrix(data.p(), q.window.size());
  while (stream.time() < q.window.hi) {
    stream.advance();
    const std::size_t t = stream.time();
    if (t >= q.window.lo)
      fill_column(q, t - q.window.lo, t, data.n(), stream.correlation(), stream.gram_diagonal());
  }
  return q;
}

// ---------------------------------------------------------------------------

ImplicitSketch::ImplicitSketch(const RegressionData& data, Track track)
    : data_(&data),
      n_(data.n()),
      p_(data.p()),
      track_(track),
      qr_(checked_qr(data)),
      residual_(data.response),
      v_(p_, p_),
      correlation_(p_, 0.0),
      diagonal_(p_, 0.0),
      w_(p_),
      q_(p_) {
  qr_.apply_qt(residual_);
  for (std::size_t i = p_; i < n_; ++i) response_norm_sq_ += residual_[i] * residual_[i];
  std::fill(residual_.begin(), residual_.begin() + static_cast<std::ptrdiff_t>(p_), 0.0);
  qr_.apply_q(residual_);
  if (track_ == Track::full) gram_ = Matrix(p_, p_);
}

void ImplicitSketch::advance() {
  if (t_ + 1 >= n_) throw DimensionError("ImplicitSketch advanced past n-1");
  const auto x = data_->design.row(t_);
  const double r = residual_[t_];
  ++t_;

  // w = R^{-T} x, q = V_{t-1}^T w, h = ||w||^2 (leverage of x).
  std::copy(x.begin(), x.end(), w_.begin());
  qr_.solve_rt(w_);
  std::fill(q_.begin(), q_.end(), 0.0);
  for (std::size_t i = 0; i < p_; ++i)
    if (w_[i] != 0.0) axpy(w_[i], v_.row(i), q_);
  const double h = dot(w_, w_);

  // W^T W / 4 gains (1 - h) x x^T - q x^T - x q^T.
  for (std::size_t j = 0; j < p_; ++j)
    diagonal_[j] += 4.0 * ((1.0 - h) * x[j] * x[j] - 2.0 * q_[j] * x[j]);
  if (track_ == Track::full) {
    for (std::size_t i = 0; i < p_; ++i) {
      auto row = gram_.row(i);
      axpy(4.0 * ((1.0 - h) * x[i] - q_[i]), x, row);
      axpy(-4.0 * x[i], q_, row);
    }
  }
  for (std::size_t i = 0; i < p_; ++i)
    if (w_[i] != 0.0) axpy(w_[i], x, v_.row(i));
  axpy(2.0 * r, x, correlation_);
}

// ---------------------------------------------------------------------------

namespace {

double median_in_place(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

double estimate_sigma_mad(const QMatrix& q) {
  if (q.stats.empty()) throw DimensionError("MAD of an empty Q matrix");
  std::vector<double> values(q.stats.data().begin(), q.stats.data().end());
  const double centre = median_in_place(values);
  for (double& v : values) v = std::abs(v - centre);
  return 1.4826 * median_in_place(values);
}

double g_expected(std::size_t t, std::size_t z, std::size_t n, std::size_t p) {
  const double nd = static_cast<double>(n);
  const double scale = 4.0 * (nd - static_cast<double>(p)) / (nd * nd);
  if (t <= z) return scale * static_cast<double>(t) * (nd - static_cast<double>(z));
  return scale * static_cast<double>(z) * (nd - static_cast<double>(t));
}

double gamma_oracle(std::size_t t, std::size_t z, std::size_t n, std::size_t p) {
  const double td = static_cast<double>(t);
  const double nd = static_cast<double>(n);
  return g_expected(t, z, n, p) * std::sqrt(nd / (td * (nd - td)));
}

}  // namespace charcoal
