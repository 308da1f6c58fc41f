#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace charcoal {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}
  // Takes ownership of row-major entries; throws DimensionError on a size
  // mismatch.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return entries_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {entries_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {entries_.data() + i * cols_, cols_};
  }
  Vector column(std::size_t j) const;

  std::span<double> data() noexcept { return entries_; }
  std::span<const double> data() const noexcept { return entries_; }

  bool all_finite() const noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

Matrix transpose(const Matrix& a);
Matrix multiply(const Matrix& a, const Matrix& b);
// a^T b without forming the transpose.
Matrix multiply_transposed(const Matrix& a, const Matrix& b);
Vector multiply(const Matrix& a, std::span<const double> v);
// a^T v
Vector multiply_transposed(const Matrix& a, std::span<const double> v);
// Rows [begin, end) of a.
Matrix row_block(const Matrix& a, std::size_t begin, std::size_t end);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double max_abs(std::span<const double> v);
double max_abs(const Matrix& a);
// Adds scale * x to y.
void axpy(double scale, std::span<const double> x, std::span<double> y);

// Householder QR of a tall matrix (rows >= cols).
//
// The reflectors are stored LAPACK-style below the diagonal. The R factor is
// reported with a non-negative diagonal; the corresponding sign flips act on
// the leading cols() columns of Q only, so the trailing columns (the
// orthogonal complement of the column space) are fixed by the reflectors.
class HouseholderQR {
 public:
  explicit HouseholderQR(Matrix x);

  std::size_t rows() const noexcept { return factors_.rows(); }
  std::size_t cols() const noexcept { return factors_.cols(); }

  // Throws RankError when some |R_kk| < rel_tol * max_k |R_kk|.
  void require_full_rank(double rel_tol = 1e-10) const;

  // Upper-triangular cols() x cols() factor with non-negative diagonal.
  Matrix r() const;
  double r_diagonal(std::size_t k) const;

  // v <- Q^T v and v <- Q v for a vector of length rows().
  void apply_qt(std::span<double> v) const;
  void apply_q(std::span<double> v) const;

  // Solves R^T w = rhs in place (forward substitution).
  void solve_rt(std::span<double> rhs) const;
  // Solves R w = rhs in place (back substitution).
  void solve_r(std::span<double> rhs) const;

  // Trailing rows() - cols() columns of the full orthogonal factor.
  Matrix complement() const;

 private:
  Matrix factors_;
  Vector tau_;
  Vector diag_sign_;
};

// Orthonormal basis A (n x (n-p)) of the orthogonal complement of the column
// space of x: A^T A = I and A^T x = 0. Throws DimensionError when n <= p and
// RankError when x is rank deficient.
Matrix complement_basis(const Matrix& x);

inline double soft_threshold(double v, double lam) {
  if (v > lam) return v - lam;
  if (v < -lam) return v + lam;
  return 0.0;
}

inline double hard_threshold(double v, double lam) {
  return (v >= lam || v <= -lam) ? v : 0.0;
}

Vector soft_threshold(std::span<const double> v, double lam);
Vector hard_threshold(std::span<const double> v, double lam);
Matrix soft_threshold(const Matrix& m, double lam);

struct SingularVector {
  Vector vector;        // unit norm, largest-magnitude entry positive
  double value = 0.0;   // ||M^T v||
  int iterations = 0;
  bool converged = false;
};

// Leading left singular vector by power iteration on M M^T from a seeded
// random start. Converged when the eigen-residual ||M M^T v - rho v|| falls
// below 1e-8 rho (at most 1000 iterations; otherwise the last iterate is
// returned with converged == false). Throws DegenerateInputError when M is
// all zero.
SingularVector leading_left_singular_vector(const Matrix& m, std::uint64_t seed);

struct LassoOptions {
  double tolerance = 1e-8;  // max coefficient change per sweep
  int max_sweeps = 10000;
};

// argmin_v (1/2m)||z - w v||^2 + lam ||v||_1 by cyclic coordinate descent
// from zero. Throws ConvergenceError (with the last iterate) on hitting the
// sweep limit.
Vector lasso_cd(const Matrix& w, std::span<const double> z, double lam,
                const LassoOptions& options = {});

// Same objective in covariance form: gram = W^T W, corr = W^T Z, rows = m.
// Starts from `start` when given (warm start), otherwise from zero. Uses
// active-set cycling with full sweeps to confirm optimality.
Vector lasso_cd_gram(const Matrix& gram, std::span<const double> corr, double rows, double lam,
                     Vector start = {}, const LassoOptions& options = {});

}  // namespace charcoal
