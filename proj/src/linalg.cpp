#include "charcoal/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "charcoal/error.hpp"

namespace charcoal {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.size() != rows_ * cols_) {
    throw DimensionError("matrix entries length " + std::to_string(entries_.size()) +
                         " does not match " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Vector Matrix::column(std::size_t j) const {
  Vector out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(entries_.begin(), entries_.end(), [](double v) { return std::isfinite(v); });
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("multiply: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) axpy(a(i, k), b.row(k), dst);
  }
  return out;
}

Matrix multiply_transposed(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("multiply_transposed: row counts differ");
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double s = a(k, i);
      if (s != 0.0) axpy(s, brow, out.row(i));
    }
  }
  return out;
}

Vector multiply(const Matrix& a, std::span<const double> v) {
  if (a.cols() != v.size()) throw DimensionError("multiply: vector length mismatch");
  Vector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), v);
  return out;
}

Vector multiply_transposed(const Matrix& a, std::span<const double> v) {
  if (a.rows() != v.size()) throw DimensionError("multiply_transposed: vector length mismatch");
  Vector out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) axpy(v[i], a.row(i), out);
  return out;
}

Matrix row_block(const Matrix& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.rows()) throw DimensionError("row_block: range out of bounds");
  Matrix out(end - begin, a.cols());
  std::copy(a.data().begin() + static_cast<std::ptrdiff_t>(begin * a.cols()),
            a.data().begin() + static_cast<std::ptrdiff_t>(end * a.cols()), out.data().begin());
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs(const Matrix& a) { return max_abs(a.data()); }

void axpy(double scale, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const double* xs = x.data();
  double* ys = y.data();
  for (std::size_t i = 0; i < n; ++i) ys[i] += scale * xs[i];
}

// ---------------------------------------------------------------------------

HouseholderQR::HouseholderQR(Matrix x) : factors_(std::move(x)) {
  const std::size_t n = factors_.rows();
  const std::size_t p = factors_.cols();
  if (n < p) throw DimensionError("QR requires rows >= cols");
  tau_.assign(p, 0.0);
  diag_sign_.assign(p, 1.0);
  Vector work(p);

  for (std::size_t k = 0; k < p; ++k) {
    double norm_sq = 0.0;
    for (std::size_t i = k; i < n; ++i) norm_sq += factors_(i, k) * factors_(i, k);
    const double alpha = std::sqrt(norm_sq);
    if (alpha == 0.0) {
      tau_[k] = 0.0;
      continue;
    }
    const double x0 = factors_(k, k);
    const double beta = x0 >= 0.0 ? -alpha : alpha;
    const double scale = 1.0 / (x0 - beta);
    for (std::size_t i = k + 1; i < n; ++i) factors_(i, k) *= scale;
    tau_[k] = (beta - x0) / beta;
    factors_(k, k) = beta;
    diag_sign_[k] = beta >= 0.0 ? 1.0 : -1.0;

    // Apply I - tau v v^T to the trailing columns; v_k = 1 implicitly.
    const std::size_t width = p - k - 1;
    if (width == 0) continue;
    std::span<double> w(work.data(), width);
    std::fill(w.begin(), w.end(), 0.0);
    axpy(1.0, factors_.row(k).subspan(k + 1), w);
    for (std::size_t i = k + 1; i < n; ++i) axpy(factors_(i, k), factors_.row(i).subspan(k + 1), w);
    const double t = tau_[k];
    axpy(-t, w, factors_.row(k).subspan(k + 1));
    for (std::size_t i = k + 1; i < n; ++i)
      axpy(-t * factors_(i, k), w, factors_.row(i).subspan(k + 1));
  }
}

void HouseholderQR::require_full_rank(double rel_tol) const {
  double largest = 0.0;
  for (std::size_t k = 0; k < cols(); ++k) largest = std::max(largest, std::abs(factors_(k, k)));
  for (std::size_t k = 0; k < cols(); ++k) {
    if (!(std::abs(factors_(k, k)) >= rel_tol * largest) || largest == 0.0) {
      throw RankError("design matrix is rank deficient (column " + std::to_string(k + 1) +
                      " of " + std::to_string(cols()) + ")");
    }
  }
}

Matrix HouseholderQR::r() const {
  const std::size_t p = cols();
  Matrix out(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) out(i, j) = diag_sign_[i] * factors_(i, j);
  return out;
}

double HouseholderQR::r_diagonal(std::size_t k) const { return std::abs(factors_(k, k)); }

void HouseholderQR::apply_qt(std::span<double> v) const {
  const std::size_t n = rows();
  for (std::size_t k = 0; k < cols(); ++k) {
    if (tau_[k] == 0.0) continue;
    double s = v[k];
    for (std::size_t i = k + 1; i < n; ++i) s += factors_(i, k) * v[i];
    s *= tau_[k];
    v[k] -= s;
    for (std::size_t i = k + 1; i < n; ++i) v[i] -= s * factors_(i, k);
  }
  for (std::size_t k = 0; k < cols(); ++k) v[k] *= diag_sign_[k];
}

void HouseholderQR::apply_q(std::span<double> v) const {
  const std::size_t n = rows();
  for (std::size_t k = 0; k < cols(); ++k) v[k] *= diag_sign_[k];
  for (std::size_t k = cols(); k-- > 0;) {
    if (tau_[k] == 0.0) continue;
    double s = v[k];
    for (std::size_t i = k + 1; i < n; ++i) s += factors_(i, k) * v[i];
    s *= tau_[k];
    v[k] -= s;
    for (std::size_t i = k + 1; i < n; ++i) v[i] -= s * factors_(i, k);
  }
}

void HouseholderQR::solve_rt(std::span<double> rhs) const {
  const std::size_t p = cols();
  for (std::size_t j = 0; j < p; ++j) {
    const double rjj = diag_sign_[j] * factors_(j, j);
    rhs[j] /= rjj;
    const double wj = rhs[j] * diag_sign_[j];
    const auto row = factors_.row(j);
    for (std::size_t i = j + 1; i < p; ++i) rhs[i] -= row[i] * wj;
  }
}

void HouseholderQR::solve_r(std::span<double> rhs) const {
  const std::size_t p = cols();
  for (std::size_t i = p; i-- > 0;) {
    const auto row = factors_.row(i);
    double s = 0.0;
    for (std::size_t j = i + 1; j < p; ++j) s += row[j] * rhs[j];
    rhs[i] = (rhs[i] - diag_sign_[i] * s) / (diag_sign_[i] * row[i]);
  }
}

Matrix HouseholderQR::complement() const {
  const std::size_t n = rows();
  const std::size_t p = cols();
  const std::size_t m = n - p;
  Matrix e(n, m);
  for (std::size_t i = 0; i < m; ++i) e(p + i, i) = 1.0;
  Vector w(m);
  for (std::size_t k = p; k-- > 0;) {
    if (tau_[k] == 0.0) continue;
    std::copy(e.row(k).begin(), e.row(k).end(), w.begin());
    for (std::size_t i = k + 1; i < n; ++i) {
      const double vi = factors_(i, k);
      if (vi != 0.0) axpy(vi, e.row(i), w);
    }
    const double t = tau_[k];
    axpy(-t, w, e.row(k));
    for (std::size_t i = k + 1; i < n; ++i) axpy(-t * factors_(i, k), w, e.row(i));
  }
  return e;
}

Matrix complement_basis(const Matrix& x) {
  if (x.rows() <= x.cols()) {
    throw DimensionError("complement basis needs n > p (got n=" + std::to_string(x.rows()) +
                         ", p=" + std::to_string(x.cols()) + ")");
  }
  HouseholderQR qr(x);
  qr.require_full_rank();
  return qr.complement();
}

// ---------------------------------------------------------------------------

Vector soft_threshold(std::span<const double> v, double lam) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], lam);
  return out;
}

Vector hard_threshold(std::span<const double> v, double lam) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = hard_threshold(v[i], lam);
  return out;
}

Matrix soft_threshold(const Matrix& m, double lam) {
  Matrix out(m.rows(), m.cols());
  auto src = m.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = soft_threshold(src[i], lam);
  return out;
}

}  // namespace charcoal
