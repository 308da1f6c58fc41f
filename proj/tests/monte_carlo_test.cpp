// Slower Monte-Carlo checks of the multiple-changepoint stages, the test's
// null behaviour and the command-line null run. Each replicate is seeded on
// its own so the outcome counts are reproducible.

#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "charcoal/cli.hpp"
#include "charcoal/multi.hpp"
#include "charcoal/rng.hpp"
#include "charcoal/simulate.hpp"
#include "charcoal/single.hpp"

using namespace charcoal;

namespace {

constexpr double kAlpha = 0.05;
constexpr double kLamCoef = 0.5;

double calibrated(std::size_t n, std::size_t p, std::size_t M, std::size_t B, std::uint64_t seed) {
  CalibrationConfig cal;
  cal.n = n;
  cal.p = p;
  cal.M = M;
  cal.B = B;
  cal.seed = seed;
  return calibrate_threshold(cal).threshold;
}

TestFn soft_test(std::size_t p, double threshold) {
  return [=](const RegressionData& slice, Interval) -> TestOutcome {
    if (slice.n() < p + 2) return {};
    const double h = normalised_h_max(q_matrix(slice, kAlpha, QVariant::diag), kLamCoef);
    return {h >= threshold, h};
  };
}

EstimateFn proj_estimator(std::size_t p) {
  return [=](const RegressionData& slice, Interval iv) -> std::size_t {
    if (slice.n() < p + 2) return 0;
    const QMatrix q = q_matrix(slice, kAlpha, QVariant::diag);
    const double s = estimate_sigma_mad(q);
    if (!(s > 0.0)) return 0;
    return estimate_proj(q, kLamCoef * s * std::log(static_cast<double>(p)), iv.s * 7919 + iv.e)
        .location;
  };
}

EstimateFn lasso_estimator(std::size_t p) {
  return [=](const RegressionData& slice, Interval) -> std::size_t {
    if (slice.n() < p + 2) return 0;
    return estimate_lasso_bic(slice, kAlpha, LassoStrategy{}).location;
  };
}

SingleInstance single_change(double rho, std::uint64_t seed) {
  SimConfig sc;
  sc.n = 600;
  sc.p = 100;
  sc.k = 3;
  sc.rho = rho;
  sc.tau = 0.3;
  sc.seed = seed;
  return generate_single(sc);
}

}  // namespace

TEST(MonteCarlo, NotFindsTheSingleChange) {
  const double threshold = calibrated(600, 100, 100, 300, 1);
  int good = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const SingleInstance inst = single_change(4.0, derive_seed(2, r));
    const auto found = not_segment(inst.data, generate_intervals(600, 100, derive_seed(3, r)), 0.0,
                                   proj_estimator(100), soft_test(100, threshold));
    if (found.size() == 1 && std::abs(static_cast<long>(found[0].location) - 180) <= 10) ++good;
  }
  EXPECT_GE(good, 90);
}

TEST(MonteCarlo, PruningRemovesSpuriousCandidateUnderNull) {
  const double threshold = calibrated(600, 100, 200, 300, 4);
  int removed = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const SingleInstance inst = single_change(0.0, derive_seed(5, r));
    if (prune_candidates(inst.data, {300}, soft_test(100, threshold)).empty()) ++removed;
  }
  EXPECT_GE(removed, 95);
}

TEST(MonteCarlo, PruningKeepsStrongTrueChanges) {
  const double threshold = calibrated(1200, 200, 200, 300, 6);
  int intact = 0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const MultiInstance inst = generate_multi(preset_m1(1.6, derive_seed(7, r)));
    if (prune_candidates(inst.data, inst.changepoints, soft_test(200, threshold)).size() == 3) ++intact;
  }
  EXPECT_GE(intact, 19);
}

TEST(MonteCarlo, MidpointRefinementKeepsExactCandidate) {
  // The slice (90, 390] leaves Lasso-BIC 200 sketch dimensions; its misses
  // are almost all one step off.
  int kept = 0, near = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const SingleInstance inst = single_change(4.0, derive_seed(8, r));
    const auto out = refine_midpoint(inst.data, {180}, lasso_estimator(100));
    const long d = std::abs(static_cast<long>(out.at(0)) - 180);
    kept += d == 0;
    near += d <= 1;
  }
  EXPECT_GE(kept, 70);
  EXPECT_GE(near, 90);
}

TEST(MonteCarlo, NullDataGivesNoChangepoints) {
  MultiConfig cfg;
  cfg.threshold = calibrated(600, 100, cfg.M, 300, 9);
  int empty = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const SingleInstance inst = single_change(0.0, derive_seed(10, r));
    cfg.seed = derive_seed(11, r);
    if (detect_multiple(inst.data, cfg).refined.empty()) ++empty;
  }
  EXPECT_GE(empty, 95);
}

TEST(MonteCarlo, SingleTestNullRejectionNearNominal) {
  // Known unit noise: calibrate H_max itself and run single_test with the
  // matching penalty.
  CalibrationConfig cal;
  cal.n = 300;
  cal.p = 60;
  cal.alpha = 0.0;
  cal.B = 1000;
  cal.level = 0.05;
  cal.plug_in_sigma = false;
  cal.seed = 12;
  const TestConfig test{0.0, default_lambda(60, 1.0), calibrate_threshold(cal).threshold};
  int rejected = 0;
  for (std::uint64_t r = 0; r < 500; ++r) {
    SimConfig sc;
    sc.n = 300;
    sc.p = 60;
    sc.rho = 0.0;
    sc.seed = derive_seed(13, r);
    rejected += single_test(generate_single(sc).data, test);
  }
  EXPECT_LE(rejected, 50);
}

TEST(MonteCarlo, CliMultiOnNullDataIsEmpty) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "charcoal_mc_cli";
  fs::create_directories(dir);
  const std::string csv = (dir / "null.csv").string();
  int empty = 0;
  for (int seed = 0; seed < 20; ++seed) {
    std::ostringstream out, err;
    const std::string s = std::to_string(seed);
    ASSERT_EQ(cli::run({"charcoal", "simulate", "--n", "300", "--p", "40", "--rho", "0", "--seed", s,
                        "-o", csv},
                       out, err),
              0);
    std::ostringstream report;
    ASSERT_EQ(cli::run({"charcoal", "detect", csv, "--multi", "--calibration-b", "200", "--seed", s},
                       report, err),
              0)
        << err.str();
    if (nlohmann::json::parse(report.str())["changepoints"].empty()) ++empty;
  }
  fs::remove_all(dir);
  EXPECT_GE(empty, 19);
}
