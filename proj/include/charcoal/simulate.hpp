#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "charcoal/linalg.hpp"
#include "charcoal/sketch.hpp"

namespace charcoal {

enum class Design { gauss, ar_toeplitz, rademacher };
enum class Noise { gauss, t4, t6, exp_centered, rademacher };

// Parsing and printing of the names used on the command line
// ("gauss", "ar", "rademacher"; "gauss", "t4", "t6", "exp", "rademacher").
Design parse_design(const std::string& name);
Noise parse_noise(const std::string& name);
std::string to_string(Design d);
std::string to_string(Noise e);

inline constexpr double kArCoefficient = 0.7;

struct SimConfig {
  std::size_t n = 600;
  std::size_t p = 200;
  std::size_t k = 3;
  double rho = 4.0;
  double tau = 0.3;
  double sigma = 1.0;
  Design design = Design::gauss;
  Noise noise = Noise::gauss;
  std::uint64_t seed = 0;
};

struct SingleInstance {
  RegressionData data;
  std::size_t z = 0;
  Vector theta;     // (beta_pre - beta_post) / 2
  Vector beta_pre;
};

// z = round(tau n); theta uniform on k-sparse vectors of norm rho (uniform
// support, normal entries rescaled); beta_pre ~ N(0, max(1, rho^2) I);
// beta_post = beta_pre - 2 theta; unit-variance noise times sigma.
SingleInstance generate_single(const SimConfig& cfg);

struct MultiSpec {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<std::size_t> changepoints;
  std::vector<double> magnitudes;
  std::size_t k = 3;
  double sigma = 1.0;
  Design design = Design::gauss;
  Noise noise = Noise::gauss;
  std::uint64_t seed = 0;
};

struct MultiInstance {
  RegressionData data;
  std::vector<std::size_t> changepoints;
  std::vector<Vector> thetas;  // theta_i = (beta_i - beta_{i+1}) / 2
};

// beta_1 ~ N(0, max(1, max_i rho_i^2) I) and beta_{i+1} = beta_i - 2 theta_i.
MultiInstance generate_multi(const MultiSpec& spec);

// n = 1200, p = 200, z = (240, 540, 900), magnitudes rho_min (1, 1.5, 2).
MultiSpec preset_m1(double rho_min, std::uint64_t seed);
// n = 2400, p = 400, z = (720, 1320, 1800, 2160), rho_min (1, 1.15, 1.45, 2.18).
MultiSpec preset_m2(double rho_min, std::uint64_t seed);

// |theta_i|^2 (z_i - z_{i-1})(z_{i+1} - z_i)(z_{i+1} - z_{i-1} - p) / (z_{i+1} - z_{i-1})^2
// with z_0 = 0 and z_{nu+1} = n; i is zero-based here.
double effective_snr(const MultiSpec& spec, std::size_t i);

// Hausdorff distance between changepoint sets; n when exactly one is empty,
// 0 when both are.
double hausdorff(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                 std::size_t n);

// Adjusted Rand index of the segmentations of {1..n} induced by two sorted
// changepoint sets (each changepoint c ends a segment at time c). When the
// index is undefined (both labelings trivial) it is 1 for identical
// segmentations and 0 otherwise.
double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                           std::size_t n);

}  // namespace charcoal
