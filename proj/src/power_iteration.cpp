#include <cmath>
#include <cstdlib>

#include "charcoal/error.hpp"
#include "charcoal/linalg.hpp"
#include "charcoal/rng.hpp"

namespace charcoal {

namespace {

constexpr int kMaxIterations = 1000;
constexpr double kResidualTolerance = 1e-8;

void normalise_sign(Vector& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v[best] < 0.0)
    for (double& x : v) x = -x;
}

}  // namespace

SingularVector leading_left_singular_vector(const Matrix& m, std::uint64_t seed) {
  // Zero rows of M carry zero weight in every left singular vector; dropping
  // them makes the iteration cheap on thresholded (mostly zero) inputs.
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < m.rows(); ++i)
    if (max_abs(m.row(i)) > 0.0) live.push_back(i);
  if (live.empty()) throw DegenerateInputError("leading singular vector of an all-zero matrix");

  const std::size_t r = live.size();
  const std::size_t cols = m.cols();
  Matrix compact(r, cols);
  for (std::size_t k = 0; k < r; ++k) {
    const auto src = m.row(live[k]);
    std::copy(src.begin(), src.end(), compact.row(k).begin());
  }

  Rng rng(seed);
  Vector v(r);
  for (double& x : v) x = rng.normal();
  double nv = norm2(v);
  for (double& x : v) x /= nv;

  SingularVector out;
  Vector w(r);
  for (int it = 1; it <= kMaxIterations; ++it) {
    const Vector y = multiply_transposed(compact, v);
    for (std::size_t k = 0; k < r; ++k) w[k] = dot(compact.row(k), y);
    const double rho = dot(y, y);
    double residual_sq = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
      const double d = w[k] - rho * v[k];
      residual_sq += d * d;
    }
    out.iterations = it;
    if (std::sqrt(residual_sq) <= kResidualTolerance * rho) {
      out.converged = true;
      break;
    }
    const double nw = norm2(w);
    if (nw == 0.0) break;
    for (std::size_t k = 0; k < r; ++k) v[k] = w[k] / nw;
  }

  out.vector.assign(m.rows(), 0.0);
  for (std::size_t k = 0; k < r; ++k) out.vector[live[k]] = v[k];
  normalise_sign(out.vector);
  out.value = norm2(multiply_transposed(m, out.vector));
  return out;
}

}  // namespace charcoal
