#include "charcoal/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <map>

#include "charcoal/error.hpp"
#include "charcoal/multi.hpp"
#include "charcoal/parallel.hpp"
#include "charcoal/rng.hpp"
#include "charcoal/single.hpp"

namespace charcoal {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::soft: return "soft";
    case Estimator::hard: return "hard";
    case Estimator::proj: return "proj";
    case Estimator::proj_primed: return "proj-primed";
    case Estimator::lasso_bic: return "lasso-bic";
    case Estimator::multi: return "multi";
  }
  return "proj";
}

Estimator parse_estimator(const std::string& name) {
  for (Estimator e : {Estimator::soft, Estimator::hard, Estimator::proj, Estimator::proj_primed,
                      Estimator::lasso_bic, Estimator::multi})
    if (to_string(e) == name) return e;
  throw ConfigError("unknown estimator '" + name + "'");
}

namespace {

std::string fmt_rho(double rho) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", rho);
  return buf;
}

Scenario single_scenario(std::size_t n, std::size_t p, std::size_t k, double rho, double tau,
                         std::vector<Estimator> estimators) {
  Scenario s;
  s.single.n = n;
  s.single.p = p;
  s.single.k = k;
  s.single.rho = rho;
  s.single.tau = tau;
  s.name = "n" + std::to_string(n) + "-p" + std::to_string(p) + "-k" + std::to_string(k) +
           "-rho" + fmt_rho(rho);
  s.estimators = std::move(estimators);
  return s;
}

std::vector<Scenario> table1() {
  const std::vector<Estimator> est{Estimator::soft, Estimator::hard, Estimator::proj,
                                   Estimator::proj_primed, Estimator::lasso_bic};
  std::vector<Scenario> out;
  for (auto [n, p, k_dense] : {std::tuple{600, 200, 14}, std::tuple{1200, 400, 20}})
    for (std::size_t k : {std::size_t{3}, std::size_t(k_dense)})
      for (double rho : {1.0, 2.0, 4.0}) out.push_back(single_scenario(n, p, k, rho, 0.3, est));
  return out;
}

std::vector<Scenario> table2() {
  std::vector<Scenario> out;
  for (std::size_t p : {std::size_t{400}, std::size_t{1000}}) {
    const auto root = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p))));
    for (std::size_t k : {std::size_t{3}, root, p})
      for (double rho : {1.0, 2.0, 4.0, 8.0})
        out.push_back(
            single_scenario(1200, p, k, rho, 0.3, {Estimator::proj, Estimator::lasso_bic}));
  }
  return out;
}

std::vector<Scenario> table3(bool m2) {
  std::vector<Scenario> out;
  for (std::size_t k : {std::size_t{3}, std::size_t{10}, std::size_t{100}})
    for (double rho : {0.8, 1.2, 1.6}) {
      Scenario s;
      s.is_multi = true;
      s.multi = m2 ? preset_m2(rho, 0) : preset_m1(rho, 0);
      s.multi.k = k;
      s.name = std::string(m2 ? "M2" : "M1") + "-k" + std::to_string(k) + "-rho" + fmt_rho(rho);
      s.estimators = {Estimator::multi};
      out.push_back(std::move(s));
    }
  return out;
}

std::vector<Scenario> robustness() {
  std::vector<Scenario> out;
  const std::vector<std::pair<Design, Noise>> settings{
      {Design::ar_toeplitz, Noise::gauss}, {Design::rademacher, Noise::gauss},
      {Design::gauss, Noise::t4},          {Design::gauss, Noise::t6},
      {Design::gauss, Noise::exp_centered}, {Design::gauss, Noise::rademacher}};
  for (auto [design, noise] : settings)
    for (int e = 0; e <= 8; ++e) {
      Scenario s = single_scenario(1200, 400, 20, std::pow(1.5, e), 0.3,
                                   {Estimator::proj, Estimator::lasso_bic});
      s.single.design = design;
      s.single.noise = noise;
      s.name = to_string(design) + "-" + to_string(noise) + "-rho1.5^" + std::to_string(e);
      out.push_back(std::move(s));
    }
  return out;
}

struct Outcome {
  std::vector<RepRecord> records;
};

std::size_t single_estimate(const RegressionData& data, double alpha, double lam_coef,
                            Estimator e, std::uint64_t seed) {
  const double lnp = std::log(static_cast<double>(data.p()));
  switch (e) {
    case Estimator::soft:
    case Estimator::hard:
    case Estimator::proj:
    case Estimator::proj_primed: {
      const QMatrix q = q_matrix(data, alpha,
                                 e == Estimator::proj_primed ? QVariant::primed : QVariant::diag);
      const double lam = lam_coef * estimate_sigma_mad(q) * lnp;
      if (e == Estimator::soft) return estimate_threshold_argmax(q, lam, ThresholdMode::soft).location;
      if (e == Estimator::hard) return estimate_threshold_argmax(q, lam, ThresholdMode::hard).location;
      return estimate_proj(q, lam, seed).location;
    }
    case Estimator::lasso_bic:
      return estimate_lasso_bic(data, alpha, LassoStrategy{}).location;
    case Estimator::multi:
      break;
  }
  throw ConfigError("multi estimator needs a multiple-changepoint scenario");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::vector<std::string> benchmark_preset_names() {
  return {"table1", "table2-charcoal", "table3-M1", "table3-M2", "robustness"};
}

std::vector<Scenario> benchmark_preset(const std::string& name) {
  if (name == "table1") return table1();
  if (name == "table2-charcoal") return table2();
  if (name == "table3-M1") return table3(false);
  if (name == "table3-M2") return table3(true);
  if (name == "robustness") return robustness();
  std::string known;
  for (const auto& n : benchmark_preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

BenchmarkResult run_benchmark(const std::vector<Scenario>& scenarios, const BenchmarkConfig& cfg) {
  if (cfg.reps < 1) throw ConfigError("reps must be at least 1");
  for (const Scenario& s : scenarios) {
    if (s.estimators.empty()) throw ConfigError("scenario " + s.name + " has no estimators");
    for (Estimator e : s.estimators)
      if ((e == Estimator::multi) != s.is_multi)
        throw ConfigError("estimator " + to_string(e) + " does not fit scenario " + s.name);
  }
  const std::size_t threads = resolve_threads(cfg.threads);

  BenchmarkResult result;
  std::map<std::pair<std::size_t, std::size_t>, double> thresholds;
  for (const Scenario& s : scenarios) {
    if (!s.is_multi) continue;
    const auto key = std::pair{s.multi.n, s.multi.p};
    if (thresholds.contains(key)) continue;
    double t = 0.0;
    if (cfg.threshold) {
      t = *cfg.threshold;
    } else {
      CalibrationConfig cal;
      cal.n = key.first;
      cal.p = key.second;
      cal.alpha = cfg.multi_alpha;
      cal.lam_coef = cfg.lam_coef;
      cal.B = cfg.calibration_B;
      cal.M = cfg.M;
      cal.seed = derive_seed(derive_seed(cfg.seed, ~std::uint64_t{0}), key.first * 1000003 + key.second);
      cal.threads = threads;
      t = calibrate_threshold(cal).threshold;
    }
    thresholds[key] = t;
    result.thresholds.emplace_back(std::to_string(key.first) + "x" + std::to_string(key.second), t);
  }

  const std::size_t tasks = scenarios.size() * cfg.reps;
  std::vector<Outcome> outcomes(tasks);
  parallel_for(tasks, threads, [&](std::size_t task) {
    const std::size_t i = task / cfg.reps;
    const std::size_t r = task % cfg.reps;
    const Scenario& s = scenarios[i];
    const std::uint64_t data_seed = derive_seed(derive_seed(cfg.seed, i), r);
    auto& records = outcomes[task].records;
    if (s.is_multi) {
      MultiSpec spec = s.multi;
      spec.seed = data_seed;
      const MultiInstance inst = generate_multi(spec);
      MultiConfig mc;
      mc.M = cfg.M;
      mc.alpha = cfg.multi_alpha;
      mc.lam_coef = cfg.lam_coef;
      mc.threshold = thresholds.at({spec.n, spec.p});
      mc.seed = derive_seed(data_seed, 2);
      mc.threads = 1;
      const auto start = std::chrono::steady_clock::now();
      const MultiResult res = detect_multiple(inst.data, mc);
      RepRecord rec{s.name, r, Estimator::multi};
      rec.seconds = seconds_since(start);
      rec.nu_error = static_cast<long>(res.refined.size()) - static_cast<long>(inst.changepoints.size());
      rec.hausdorff = hausdorff(res.refined, inst.changepoints, spec.n);
      rec.ari = adjusted_rand_index(res.refined, inst.changepoints, spec.n);
      records.push_back(std::move(rec));
      return;
    }
    SimConfig sc = s.single;
    sc.seed = data_seed;
    const SingleInstance inst = generate_single(sc);
    for (Estimator e : s.estimators) {
      const auto start = std::chrono::steady_clock::now();
      RepRecord rec{s.name, r, e};
      rec.estimate = single_estimate(inst.data, s.alpha, cfg.lam_coef, e, derive_seed(data_seed, 1));
      rec.seconds = seconds_since(start);
      rec.loss = std::abs(static_cast<double>(rec.estimate) - static_cast<double>(inst.z));
      records.push_back(std::move(rec));
    }
  });

  for (Outcome& o : outcomes)
    for (RepRecord& rec : o.records) result.records.push_back(std::move(rec));

  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    for (std::size_t j = 0; j < scenarios[i].estimators.size(); ++j) {
      Aggregate agg{scenarios[i].name, scenarios[i].estimators[j], cfg.reps};
      double sq = 0.0;
      // Records are laid out scenario-major, then rep, then estimator.
      std::size_t base = 0;
      for (std::size_t q = 0; q < i; ++q) base += cfg.reps * scenarios[q].estimators.size();
      const std::size_t width = scenarios[i].estimators.size();
      for (std::size_t r = 0; r < cfg.reps; ++r) {
        const RepRecord& rec = result.records[base + r * width + j];
        agg.mean_loss += rec.loss;
        sq += rec.loss * rec.loss;
        agg.mean_hausdorff += rec.hausdorff;
        agg.mean_ari += rec.ari;
        agg.mean_seconds += rec.seconds;
        const long d = std::clamp(rec.nu_error, -2L, 2L);
        ++agg.nu_counts[d + 2];
      }
      const double reps = static_cast<double>(cfg.reps);
      agg.mean_loss /= reps;
      agg.rmse = std::sqrt(sq / reps);
      agg.mean_hausdorff /= reps;
      agg.mean_ari /= reps;
      agg.mean_seconds /= reps;
      result.aggregates.push_back(std::move(agg));
    }
  }
  return result;
}

}  // namespace charcoal
