#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "charcoal/simulate.hpp"

namespace charcoal {

enum class Estimator {
  soft,         // argmax_t ||soft(Q_t)||
  hard,         // argmax_t ||hard(Q_t)||
  proj,         // projection estimator on the diag-normalised Q
  proj_primed,  // projection estimator on the primed Q
  lasso_bic,
  multi,        // full multiple-changepoint pipeline
};

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);

// One data-generating setting. Single scenarios draw from `single` (its seed
// is replaced per replicate); multi scenarios from `multi`.
struct Scenario {
  std::string name;
  bool is_multi = false;
  SimConfig single;
  MultiSpec multi;
  double alpha = 0.0;
  std::vector<Estimator> estimators;
};

// Presets: table1, table2-charcoal, table3-M1, table3-M2, robustness.
std::vector<std::string> benchmark_preset_names();
// Throws ConfigError listing the known names.
std::vector<Scenario> benchmark_preset(const std::string& name);

struct BenchmarkConfig {
  std::size_t reps = 100;
  std::uint64_t seed = 0;
  double lam_coef = 0.5;
  // Multiple-changepoint settings. The threshold is calibrated once per
  // (n, p) unless given.
  std::size_t M = 200;
  double multi_alpha = 0.05;
  std::size_t calibration_B = 1000;
  std::optional<double> threshold;
  std::optional<std::size_t> threads;
};

struct RepRecord {
  std::string scenario;
  std::size_t rep = 0;
  Estimator estimator = Estimator::proj;
  // Single scenarios: the estimate and |estimate - z|.
  std::size_t estimate = 0;
  double loss = 0.0;
  // Multi scenarios.
  long nu_error = 0;
  double hausdorff = 0.0;
  double ari = 0.0;
  double seconds = 0.0;
};

struct Aggregate {
  std::string scenario;
  Estimator estimator = Estimator::proj;
  std::size_t reps = 0;
  double mean_loss = 0.0;
  double rmse = 0.0;
  // Counts of nu_hat - nu in {<= -2, -1, 0, 1, >= 2}.
  std::size_t nu_counts[5] = {0, 0, 0, 0, 0};
  double mean_hausdorff = 0.0;
  double mean_ari = 0.0;
  double mean_seconds = 0.0;
};

struct BenchmarkResult {
  std::vector<RepRecord> records;  // scenario, then rep, then estimator order
  std::vector<Aggregate> aggregates;
  // Thresholds used by multi scenarios, keyed "n x p".
  std::vector<std::pair<std::string, double>> thresholds;
};

// Replicate r of scenario i uses data seed derive_seed(derive_seed(seed, i), r).
// Everything except the `seconds` fields is independent of the thread count.
BenchmarkResult run_benchmark(const std::vector<Scenario>& scenarios, const BenchmarkConfig& cfg);

}  // namespace charcoal
