#include "charcoal/multi.hpp"

#include <algorithm>
#include <cmath>

#include "charcoal/error.hpp"
#include "charcoal/parallel.hpp"
#include "charcoal/rng.hpp"
#include "charcoal/single.hpp"

namespace charcoal {

std::vector<Interval> generate_intervals(std::size_t n, std::size_t M, std::uint64_t seed) {
  if (n < 2) throw ConfigError("intervals need n >= 2");
  if (M < 1) throw ConfigError("need at least one interval");
  Rng rng(seed);
  std::vector<Interval> out;
  out.reserve(M);
  // Ordered draws from {0..n}^2 with ties rejected give every unordered pair
  // the same probability.
  while (out.size() < M) {
    const std::size_t a = rng.below(n + 1);
    const std::size_t b = rng.below(n + 1);
    if (a == b) continue;
    out.push_back({std::min(a, b), std::max(a, b)});
  }
  return out;
}

std::vector<Candidate> not_segment(const RegressionData& data, const std::vector<Interval>& intervals,
                                   double varpi, const EstimateFn& estimate, const TestFn& test,
                                   std::size_t threads, NotTrace* trace) {
  const std::size_t n = data.n();
  const std::size_t p = data.p();
  if (!(varpi >= 0.0 && varpi < 0.5)) throw ConfigError("varpi must lie in [0, 1/2)");
  const auto trim = static_cast<std::size_t>(std::floor(static_cast<double>(n) * varpi + 1e-9));
  for (const Interval& iv : intervals)
    if (iv.s >= iv.e || iv.e > n) throw DimensionError("interval outside (0, n]");

  std::vector<TestOutcome> outcomes(intervals.size());
  std::vector<char> skipped(intervals.size(), 0);
  parallel_for(intervals.size(), threads, [&](std::size_t m) {
    const Interval& iv = intervals[m];
    if (iv.length() <= 2 * trim + p) {
      skipped[m] = 1;
      return;
    }
    const Interval inner{iv.s + trim, iv.e - trim};
    outcomes[m] = test(data.slice(inner.s, inner.e), inner);
  });
  if (trace) {
    trace->segments.clear();
    trace->skipped = static_cast<std::size_t>(std::count(skipped.begin(), skipped.end(), 1));
  }

  std::vector<char> usable(intervals.size());
  for (std::size_t m = 0; m < intervals.size(); ++m) usable[m] = outcomes[m].reject ? 1 : 0;

  std::vector<Candidate> found;
  std::vector<Interval> stack{{0, n}};
  while (!stack.empty()) {
    const Interval seg = stack.back();
    stack.pop_back();
    if (seg.length() < 2) continue;
    if (trace) trace->segments.push_back(seg);
    while (true) {
      std::size_t best = intervals.size();
      for (std::size_t m = 0; m < intervals.size(); ++m) {
        if (!usable[m] || intervals[m].s < seg.s || intervals[m].e > seg.e) continue;
        if (best == intervals.size() || intervals[m].length() < intervals[best].length()) best = m;
      }
      if (best == intervals.size()) break;
      const Interval& iv = intervals[best];
      const std::size_t offset = estimate(data.slice(iv.s, iv.e), iv);
      if (offset == 0 || offset >= iv.length()) {
        // The estimator could not use this interval; try the next narrowest.
        usable[best] = 0;
        continue;
      }
      const std::size_t b = iv.s + offset;
      found.push_back({b, best, outcomes[best].statistic});
      // Right part first so the left part is visited first.
      stack.push_back({b, seg.e});
      stack.push_back({seg.s, b});
      break;
    }
  }
  std::sort(found.begin(), found.end(),
            [](const Candidate& a, const Candidate& b) { return a.location < b.location; });
  return found;
}

std::vector<std::size_t> prune_candidates(const RegressionData& data,
                                          const std::vector<std::size_t>& candidates,
                                          const TestFn& test) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const std::size_t left = kept.empty() ? 0 : kept.back();
    const std::size_t right = i + 1 < candidates.size() ? candidates[i + 1] : data.n();
    if (right <= left + 1) continue;
    if (test(data.slice(left, right), {left, right}).reject) kept.push_back(candidates[i]);
  }
  return kept;
}

namespace {

// Estimate on (lo, hi] if it holds at least p + 2 points, else keep `fallback`.
std::size_t reestimate(const RegressionData& data, std::size_t lo, std::size_t hi,
                       std::size_t fallback, const EstimateFn& estimate) {
  if (hi <= lo || hi - lo < data.p() + 2) return fallback;
  const std::size_t offset = estimate(data.slice(lo, hi), {lo, hi});
  if (offset == 0 || offset >= hi - lo) return fallback;
  return lo + offset;
}

}  // namespace

std::vector<std::size_t> refine_midpoint(const RegressionData& data,
                                         const std::vector<std::size_t>& candidates,
                                         const EstimateFn& estimate) {
  std::vector<std::size_t> out(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const std::size_t prev = i == 0 ? 0 : candidates[i - 1];
    const std::size_t next = i + 1 < candidates.size() ? candidates[i + 1] : data.n();
    out[i] = reestimate(data, (prev + candidates[i]) / 2, (candidates[i] + next) / 2, candidates[i],
                        estimate);
  }
  return out;
}

std::vector<std::size_t> refine_full(const RegressionData& data,
                                     const std::vector<std::size_t>& candidates, double alpha,
                                     const EstimateFn& estimate) {
  if (!(alpha >= 0.0 && alpha < 0.5)) throw ConfigError("alpha must lie in [0, 1/2)");
  const auto trim = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(data.n()) + 1e-9));
  std::vector<std::size_t> out(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const std::size_t prev = i == 0 ? 0 : candidates[i - 1];
    const std::size_t next = i + 1 < candidates.size() ? candidates[i + 1] : data.n();
    const std::size_t lo = prev + trim;
    const std::size_t hi = next >= trim ? next - trim : 0;
    out[i] = reestimate(data, lo, hi, candidates[i], estimate);
  }
  return out;
}

MultiResult detect_multiple(const RegressionData& data, const MultiConfig& cfg) {
  if (cfg.M < 1) throw ConfigError("need at least one interval");
  if (!(cfg.threshold > 0.0)) throw ConfigError("threshold must be positive");
  if (data.p() < 2) throw ConfigError("detection needs p >= 2");
  burn_in_window(std::max<std::size_t>(data.n(), 2), cfg.alpha);  // validates alpha

  MultiResult out;
  out.sigma = cfg.sigma ? *cfg.sigma : estimate_sigma_mad(q_matrix(data, 0.0, QVariant::diag));
  if (!(out.sigma > 0.0)) throw DegenerateInputError("noise scale estimate is zero");
  out.lambda = cfg.lam_coef * out.sigma * std::log(static_cast<double>(data.p()));
  out.threshold = cfg.threshold;

  const double lam_coef = cfg.lam_coef;
  const double threshold = cfg.threshold;
  const double alpha = cfg.alpha;
  const std::optional<double> known = cfg.sigma;
  const std::size_t p = data.p();
  const std::uint64_t seed = cfg.seed;
  const std::size_t n = data.n();

  const TestFn test = [=](const RegressionData& slice, Interval) -> TestOutcome {
    if (slice.n() < p + 2) return {};
    try {
      const double h = normalised_h_max(q_matrix(slice, alpha, QVariant::diag), lam_coef, known);
      return {h >= threshold, h};
    } catch (const RankError&) {
      return {};
    }
  };
  auto proj = [=](const RegressionData& slice, Interval iv) -> std::size_t {
    if (slice.n() < p + 2) return 0;
    try {
      const QMatrix q = q_matrix(slice, alpha, QVariant::diag);
      const double s = known ? *known : estimate_sigma_mad(q);
      if (!(s > 0.0)) return 0;
      const double lam = lam_coef * s * std::log(static_cast<double>(p));
      return estimate_proj(q, lam, derive_seed(seed, 1 + iv.s * (n + 1) + iv.e)).location;
    } catch (const RankError&) {
      return 0;
    }
  };
  const EstimateFn proj_fn = proj;
  const EstimateFn lasso_fn = [=](const RegressionData& slice, Interval) -> std::size_t {
    if (slice.n() < p + 2) return 0;
    try {
      LassoStrategy strategy;
      strategy.sigma = known;
      return estimate_lasso_bic(slice, alpha, strategy).location;
    } catch (const RankError&) {
      return 0;
    } catch (const DegenerateInputError&) {
      return 0;
    }
  };
  const EstimateFn& refine_fn = cfg.refine == RefineMethod::lasso_bic ? lasso_fn : proj_fn;

  out.intervals = generate_intervals(data.n(), cfg.M, derive_seed(seed, 0));
  out.candidates = not_segment(data, out.intervals, cfg.varpi, proj_fn, test,
                               resolve_threads(cfg.threads), &out.trace);
  for (const Candidate& c : out.candidates) out.raw.push_back(c.location);
  out.pruned = prune_candidates(data, out.raw, test);
  out.midpoint = refine_midpoint(data, out.pruned, refine_fn);
  std::sort(out.midpoint.begin(), out.midpoint.end());
  out.refined = refine_full(data, out.midpoint, alpha, refine_fn);
  std::sort(out.refined.begin(), out.refined.end());
  return out;
}

}  // namespace charcoal
