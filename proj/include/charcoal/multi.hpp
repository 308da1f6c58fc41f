#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "charcoal/sketch.hpp"

namespace charcoal {

// Time interval (s, e].
struct Interval {
  std::size_t s = 0;
  std::size_t e = 0;

  std::size_t length() const noexcept { return e - s; }
  bool operator==(const Interval&) const = default;
};

// M intervals drawn independently and uniformly from all integer pairs
// 0 <= s < e <= n.
std::vector<Interval> generate_intervals(std::size_t n, std::size_t M, std::uint64_t seed);

struct TestOutcome {
  bool reject = false;
  double statistic = 0.0;
};

// Both callbacks receive the data restricted to one interval and must be
// total. An estimator returns a time index in [1, len-1] of its slice, or 0
// when the slice is unusable; a test returns reject = false in that case.
// Estimators receive the absolute interval so they can seed themselves.
using EstimateFn = std::function<std::size_t(const RegressionData&, Interval)>;
using TestFn = std::function<TestOutcome(const RegressionData&, Interval)>;

struct Candidate {
  std::size_t location = 0;
  std::size_t interval = 0;  // index into the interval list
  double statistic = 0.0;
};

struct NotTrace {
  // Segments (s, e] on which the recursion searched for a narrowest
  // rejecting interval, in visiting order.
  std::vector<Interval> segments;
  // Number of intervals skipped as too short for the test.
  std::size_t skipped = 0;
};

// Narrowest-over-threshold recursion. Every interval is tested once on its
// trimmed slice (s + floor(n varpi), e - floor(n varpi)]; tests run on up to
// `threads` workers. Returns candidates sorted by location.
std::vector<Candidate> not_segment(const RegressionData& data, const std::vector<Interval>& intervals,
                                   double varpi, const EstimateFn& estimate, const TestFn& test,
                                   std::size_t threads = 1, NotTrace* trace = nullptr);

// Tests each candidate on (previous survivor, next candidate] and drops it
// when the test does not reject; scanned left to right.
std::vector<std::size_t> prune_candidates(const RegressionData& data,
                                          const std::vector<std::size_t>& candidates,
                                          const TestFn& test);

// Re-estimates candidate i on (floor((z_{i-1}+z_i)/2), floor((z_i+z_{i+1})/2)]
// with z_0 = 0 and z_{nu+1} = n. Slices with fewer than p + 2 points leave
// the candidate unchanged.
std::vector<std::size_t> refine_midpoint(const RegressionData& data,
                                         const std::vector<std::size_t>& candidates,
                                         const EstimateFn& estimate);

// Re-estimates candidate i on (z_{i-1} + floor(alpha n), z_{i+1} - floor(alpha n)].
std::vector<std::size_t> refine_full(const RegressionData& data,
                                     const std::vector<std::size_t>& candidates, double alpha,
                                     const EstimateFn& estimate);

enum class RefineMethod { lasso_bic, proj };

struct MultiConfig {
  std::size_t M = 200;
  double varpi = 0.0;
  double alpha = 0.05;
  double lam_coef = 0.5;
  // Threshold for normalised_h_max, as returned by calibrate_threshold.
  double threshold = 1.0;
  // Known noise level. When absent every test and estimate on a slice uses
  // the MAD estimate from that slice's own Q matrix.
  std::optional<double> sigma;
  RefineMethod refine = RefineMethod::lasso_bic;
  std::uint64_t seed = 0;
  std::optional<std::size_t> threads;
};

struct MultiResult {
  std::vector<std::size_t> raw;
  std::vector<std::size_t> pruned;
  std::vector<std::size_t> midpoint;
  std::vector<std::size_t> refined;
  std::vector<Candidate> candidates;
  std::vector<Interval> intervals;
  NotTrace trace;
  // Known noise level or the MAD estimate on the full data, and the matching
  // lambda; reported only, slices estimate their own when sigma is unknown.
  double sigma = 0.0;
  double lambda = 0.0;
  double threshold = 0.0;
};

// Intervals, NOT recursion with the projection estimator and soft test,
// pruning, then midpoint and full refinement.
MultiResult detect_multiple(const RegressionData& data, const MultiConfig& cfg);

}  // namespace charcoal
