#include <algorithm>
#include <cmath>

#include "charcoal/error.hpp"
#include "charcoal/linalg.hpp"

namespace charcoal {

Vector lasso_cd(const Matrix& w, std::span<const double> z, double lam,
                const LassoOptions& options) {
  const std::size_t m = w.rows();
  const std::size_t p = w.cols();
  if (z.size() != m) throw DimensionError("lasso_cd: response length does not match design rows");
  if (m == 0) throw DimensionError("lasso_cd: empty design");
  if (!(lam > 0.0)) throw ConfigError("lasso_cd: lambda must be positive");

  const Matrix columns = transpose(w);
  Vector col_sq(p);
  for (std::size_t j = 0; j < p; ++j) col_sq[j] = dot(columns.row(j), columns.row(j));

  const double penalty = lam * static_cast<double>(m);
  Vector theta(p, 0.0);
  Vector residual(z.begin(), z.end());

  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (col_sq[j] <= 0.0) continue;
      const auto col = columns.row(j);
      const double rho = dot(col, residual) + col_sq[j] * theta[j];
      const double updated = soft_threshold(rho, penalty) / col_sq[j];
      const double delta = updated - theta[j];
      if (delta != 0.0) {
        axpy(-delta, col, residual);
        theta[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change < options.tolerance) return theta;
  }
  throw ConvergenceError("lasso_cd did not converge", std::move(theta));
}

Vector lasso_cd_gram(const Matrix& gram, std::span<const double> corr, double rows, double lam,
                     Vector start, const LassoOptions& options) {
  const std::size_t p = gram.rows();
  if (gram.cols() != p || corr.size() != p)
    throw DimensionError("lasso_cd_gram: gram/correlation dimensions differ");
  if (!(lam > 0.0)) throw ConfigError("lasso_cd_gram: lambda must be positive");
  if (start.empty()) start.assign(p, 0.0);
  if (start.size() != p) throw DimensionError("lasso_cd_gram: warm start has wrong length");

  const double penalty = lam * rows;
  Vector theta = std::move(start);
  // gradient[j] = corr[j] - (G theta)[j]
  Vector gradient(corr.begin(), corr.end());
  for (std::size_t j = 0; j < p; ++j)
    if (theta[j] != 0.0) axpy(-theta[j], gram.row(j), gradient);

  auto update = [&](std::size_t j) -> double {
    const double gjj = gram(j, j);
    if (gjj <= 0.0) return 0.0;
    const double rho = gradient[j] + gjj * theta[j];
    const double updated = soft_threshold(rho, penalty) / gjj;
    const double delta = updated - theta[j];
    if (delta == 0.0) return 0.0;
    axpy(-delta, gram.row(j), gradient);
    theta[j] = updated;
    return std::abs(delta);
  };

  std::vector<std::size_t> active;
  int sweeps = 0;
  while (sweeps < options.max_sweeps) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < p; ++j) max_change = std::max(max_change, update(j));
    ++sweeps;
    if (max_change < options.tolerance) return theta;

    active.clear();
    for (std::size_t j = 0; j < p; ++j)
      if (theta[j] != 0.0) active.push_back(j);
    while (sweeps < options.max_sweeps) {
      double inner_change = 0.0;
      for (std::size_t j : active) inner_change = std::max(inner_change, update(j));
      ++sweeps;
      if (inner_change < options.tolerance) break;
    }
  }
  // Coordinates along near-flat directions of a singular Gram matrix can keep
  // creeping long after the optimality conditions hold; accept such iterates.
  const double slack = 1e-6 * std::max(1.0, lam);
  for (std::size_t j = 0; j < p; ++j) {
    const double g = gradient[j] / rows;
    const double excess = theta[j] != 0.0 ? std::abs(g - std::copysign(lam, theta[j])) : std::abs(g) - lam;
    if (excess > slack) throw ConvergenceError("lasso_cd_gram did not converge", std::move(theta));
  }
  return theta;
}

}  // namespace charcoal
