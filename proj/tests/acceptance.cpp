// charcoal_acceptance <criterion|all>: prints one PASS/FAIL line per
// acceptance criterion and exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "charcoal/benchmark.hpp"
#include "charcoal/cli.hpp"
#include "charcoal/multi.hpp"
#include "charcoal/parallel.hpp"
#include "charcoal/simulate.hpp"
#include "charcoal/single.hpp"
#include "oracles.hpp"

using namespace charcoal;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [FAILED]");
  }
};

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

RegressionData noiseless_change(std::size_t n, std::size_t p, std::size_t z, Rng& rng,
                                Vector& theta) {
  Matrix x = oracle::random_matrix(n, p, rng);
  const Vector beta = oracle::random_vector(p, rng);
  theta = oracle::random_vector(p, rng);
  Vector y(n);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < p; ++j)
      y[t] += x(t, j) * (t < z ? beta[j] : beta[j] - 2.0 * theta[j]);
  return RegressionData(std::move(x), std::move(y));
}

Verdict exact_algebra() {
  Verdict v;
  Rng rng(101);
  double orth = 0.0, annihilate = 0.0, sketch_resp = 0.0, identity = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t p = 1 + rng.below(8);
    const std::size_t n = p + 2 + rng.below(30 - p - 1);
    const std::size_t z = 1 + rng.below(n - 1);
    Vector theta;
    const RegressionData data = noiseless_change(n, p, z, rng, theta);
    const SketchedData sk = sketch(data);
    const Matrix& a = sk.basis;
    Matrix ata = oracle::naive_multiply(oracle::naive_transpose(a), a);
    orth = std::max(orth, oracle::max_abs_diff(ata, Matrix::identity(a.cols())));
    const Matrix atx = oracle::naive_multiply(oracle::naive_transpose(a), data.design);
    annihilate = std::max(annihilate, max_abs(atx) / max_abs(data.design));
    const Matrix wz = oracle::materialise_w(a, data.design, z);
    const Vector expected = multiply(wz, theta);
    for (std::size_t i = 0; i < expected.size(); ++i)
      sketch_resp = std::max(sketch_resp, std::abs(sk.response[i] - expected[i]) /
                                              std::max(1.0, std::abs(expected[i])));
    const Matrix s_inv =
        oracle::solve(oracle::block_gram(data.design, 0, n), Matrix::identity(p));
    const Matrix tail = oracle::block_gram(data.design, z, n);
    for (std::size_t t = 1; t <= z; ++t) {
      const Matrix lhs =
          oracle::naive_multiply(oracle::naive_transpose(oracle::materialise_w(a, data.design, t)), wz);
      Matrix rhs = oracle::naive_multiply(
          oracle::naive_multiply(oracle::block_gram(data.design, 0, t), s_inv), tail);
      for (double& x : rhs.data()) x *= 4.0;
      identity = std::max(identity, oracle::max_abs_diff(lhs, rhs) / std::max(1.0, max_abs(rhs)));
    }
  }
  v.require(orth < 1e-10, "max|A'A-I| = " + num(orth));
  v.require(annihilate < 1e-8, "max|A'X|/max|X| = " + num(annihilate));
  v.require(sketch_resp < 1e-8, "noiseless Z vs W_z theta = " + num(sketch_resp));
  v.require(identity < 1e-6, "cross-Gram identity rel err = " + num(identity));
  return v;
}

Verdict oracle_suite() {
  Verdict v;
  Rng rng(202);
  double q_err = 0.0;
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 4 + rng.below(27);
    const std::size_t p = 1 + rng.below(n - 3);
    const RegressionData data(oracle::random_matrix(n, p, rng), oracle::random_vector(n, rng));
    const SketchedData sk = sketch(data);
    for (QVariant variant : {QVariant::diag, QVariant::primed}) {
      const QMatrix q = q_matrix(data, 0.0, variant);
      for (std::size_t c = 0; c < q.length(); ++c) {
        const Vector e = oracle::naive_q_column(sk.basis, data.design, sk.response, q.time_at(c), variant);
        for (std::size_t j = 0; j < p; ++j)
          q_err = std::max(q_err, std::abs(q.stats(j, c) - e[j]) / (1.0 + std::abs(e[j])));
      }
    }
  }
  v.require(q_err < 1e-8, "streaming Q vs naive = " + num(q_err));

  double kkt = 0.0, objective = 0.0;
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t m = 10 + rng.below(30);
    const std::size_t p = 2 + rng.below(10);
    const Matrix w = oracle::random_matrix(m, p, rng);
    const Vector z = oracle::random_vector(m, rng);
    const double lam = 0.02 + 0.3 * rng.uniform();
    const Vector cd = lasso_cd(w, z, lam);
    kkt = std::max(kkt, oracle::lasso_kkt_violation(w, z, lam, cd));
    const double f_cd = oracle::lasso_objective(w, z, lam, cd);
    const double f_pg = oracle::lasso_objective(w, z, lam, oracle::lasso_proximal_gradient(w, z, lam));
    objective = std::max(objective, std::abs(f_cd - f_pg) / f_pg);
  }
  v.require(kkt < 1e-6, "lasso KKT = " + num(kkt));
  v.require(objective < 1e-6, "lasso vs proximal objective = " + num(objective));

  double angle = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix m = oracle::random_matrix(3 + rng.below(10), 3 + rng.below(15), rng);
    const auto [values, vectors] = oracle::jacobi_eigen(oracle::naive_multiply(m, oracle::naive_transpose(m)));
    std::size_t top = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
      if (values[i] > values[top]) top = i;
    const SingularVector sv = leading_left_singular_vector(m, rep);
    const double cosine = std::min(1.0, std::abs(dot(sv.vector, vectors.column(top))));
    angle = std::max(angle, std::acos(cosine));
  }
  v.require(angle < 1e-6, "singular vector angle = " + num(angle) + " rad");

  double ari = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng.below(199);
    auto draw = [&] {
      std::vector<std::size_t> cps;
      for (std::size_t t = 1; t < n; ++t)
        if (rng.below(n) < 3) cps.push_back(t);
      return cps;
    };
    const auto a = draw(), b = draw();
    ari = std::max(ari, std::abs(adjusted_rand_index(a, b, n) - oracle::brute_force_ari(a, b, n)));
  }
  v.require(ari < 1e-12, "ARI vs pair counting = " + num(ari));

  std::size_t misses = 0, cases = 0;
  for (std::size_t n = 10; n <= 60; n += 5)
    for (std::size_t p = 1; p < n / 2; p += 3)
      for (std::size_t z = 1; z < n; ++z) {
        std::size_t best = 1;
        for (std::size_t t = 2; t < n; ++t)
          if (gamma_oracle(t, z, n, p) > gamma_oracle(best, z, n, p)) best = t;
        ++cases;
        if (best != z) ++misses;
      }
  v.require(misses == 0, "gamma argmax = z in " + std::to_string(cases - misses) + "/" +
                              std::to_string(cases) + " cases");
  return v;
}

Verdict cross_gram_mean() {
  Verdict v;
  const std::size_t n = 80, p = 20, z = 40, reps = 500;
  const std::size_t times[] = {20, 40, 60};
  Rng rng(303);
  std::vector<Matrix> sum(3, Matrix(p, p)), sum_sq(3, Matrix(p, p));
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const Matrix x = oracle::random_matrix(n, p, rng);
    const Matrix a = complement_basis(x);
    const Matrix wz = oracle::materialise_w(a, x, z);
    for (int k = 0; k < 3; ++k) {
      const Matrix c = multiply_transposed(oracle::materialise_w(a, x, times[k]), wz);
      for (std::size_t i = 0; i < p * p; ++i) {
        sum[k].data()[i] += c.data()[i];
        sum_sq[k].data()[i] += c.data()[i] * c.data()[i];
      }
    }
  }
  const double r = static_cast<double>(reps);
  for (int k = 0; k < 3; ++k) {
    const double g = g_expected(times[k], z, n, p);
    double worst = 0.0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        const double mean = sum[k](i, j) / r;
        const double var = (sum_sq[k](i, j) / r - mean * mean) * r / (r - 1.0);
        worst = std::max(worst, std::abs(mean - (i == j ? g : 0.0)) / std::sqrt(var / r));
      }
    v.require(worst < 5.0, "t=" + std::to_string(times[k]) + " max |mean-g I|/se = " + num(worst));
  }
  return v;
}

const Aggregate& find(const BenchmarkResult& res, const std::string& scenario, Estimator e) {
  for (const Aggregate& a : res.aggregates)
    if (a.scenario == scenario && a.estimator == e) return a;
  throw std::runtime_error("missing aggregate " + scenario);
}

Scenario single_scenario(const std::string& name, std::size_t n, std::size_t p, std::size_t k,
                         double rho, std::vector<Estimator> est) {
  Scenario s;
  s.name = name;
  s.single.n = n;
  s.single.p = p;
  s.single.k = k;
  s.single.rho = rho;
  s.single.tau = 0.3;
  s.estimators = std::move(est);
  return s;
}

Verdict table1() {
  Verdict v;
  BenchmarkConfig cfg;
  cfg.reps = 100;
  cfg.seed = 404;
  const auto res = run_benchmark(
      {single_scenario("t1", 600, 200, 3, 4.0, {Estimator::proj, Estimator::lasso_bic})}, cfg);
  const double a1 = find(res, "t1", Estimator::proj).rmse;
  const double a2 = find(res, "t1", Estimator::lasso_bic).rmse;
  v.require(a1 <= 5.0, "RMSE proj = " + num(a1));
  v.require(a2 <= 5.0, "RMSE lasso-bic = " + num(a2));
  return v;
}

Verdict table2() {
  Verdict v;
  BenchmarkConfig cfg;
  cfg.reps = 100;
  cfg.seed = 505;
  const auto res = run_benchmark(
      {single_scenario("t2", 1200, 400, 3, 4.0, {Estimator::proj, Estimator::lasso_bic})}, cfg);
  const double a1 = find(res, "t2", Estimator::proj).mean_loss;
  const double a2 = find(res, "t2", Estimator::lasso_bic).mean_loss;
  v.require(a1 <= 5.0, "mean |z_hat - z| proj = " + num(a1));
  v.require(a2 <= 6.0, "mean |z_hat - z| lasso-bic = " + num(a2));
  return v;
}

Verdict test_validity() {
  Verdict v;
  CalibrationConfig cal;
  cal.n = 600;
  cal.p = 200;
  cal.seed = 606;
  const Calibration c = calibrate_threshold(cal);
  auto rejects = [&](double rho, std::size_t reps, std::uint64_t seed) {
    std::vector<char> hit(reps, 0);
    parallel_for(reps, resolve_threads(), [&](std::size_t r) {
      SimConfig sc;
      sc.n = 600;
      sc.p = 200;
      sc.k = 3;
      sc.rho = rho;
      sc.seed = derive_seed(seed, r);
      const SingleInstance inst = generate_single(sc);
      const double h = normalised_h_max(q_matrix(inst.data, cal.alpha, QVariant::diag), cal.lam_coef);
      hit[r] = h >= c.threshold ? 1 : 0;
    });
    return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(reps);
  };
  const double size = rejects(0.0, 200, 607);
  const double power = rejects(8.0, 100, 608);
  v.require(true, "T = " + num(c.threshold) + (c.gev ? " (GEV)" : " (empirical)"));
  v.require(size <= 0.05, "null rejection = " + num(size));
  v.require(power >= 0.99, "power at rho=8 = " + num(power));
  return v;
}

Verdict multi_m1() {
  Verdict v;
  CalibrationConfig cal;
  cal.n = 1200;
  cal.p = 200;
  cal.seed = 707;
  const double threshold = calibrate_threshold(cal).threshold;
  const std::size_t reps = 20;
  std::size_t exact = 0;
  double haus = 0.0, ari = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const MultiInstance inst = generate_multi(preset_m1(1.6, derive_seed(708, r)));
    MultiConfig mc;
    mc.threshold = threshold;
    mc.seed = derive_seed(709, r);
    const MultiResult res = detect_multiple(inst.data, mc);
    if (res.refined.size() == inst.changepoints.size()) ++exact;
    haus += hausdorff(res.refined, inst.changepoints, 1200);
    ari += adjusted_rand_index(res.refined, inst.changepoints, 1200);
  }
  haus /= reps;
  ari /= reps;
  v.require(true, "T = " + num(threshold));
  v.require(exact >= 17, "nu_hat = 3 in " + std::to_string(exact) + "/20");
  v.require(haus <= 30.0, "mean Hausdorff = " + num(haus));
  v.require(ari >= 0.93, "mean ARI = " + num(ari));
  return v;
}

Verdict robustness() {
  Verdict v;
  std::vector<Scenario> scenarios;
  for (int e : {2, 4, 6}) {
    Scenario s = single_scenario("rho1.5^" + std::to_string(e), 1200, 400, 20, std::pow(1.5, e),
                                 {Estimator::lasso_bic});
    s.single.design = Design::ar_toeplitz;
    s.single.noise = Noise::t4;
    scenarios.push_back(s);
  }
  BenchmarkConfig cfg;
  cfg.reps = 50;
  cfg.seed = 808;
  const auto res = run_benchmark(scenarios, cfg);
  std::vector<double> loss;
  for (const Scenario& s : scenarios) loss.push_back(find(res, s.name, Estimator::lasso_bic).mean_loss);
  v.require(loss[1] <= loss[0] && loss[2] <= loss[1],
            "mean loss " + num(loss[0]) + " >= " + num(loss[1]) + " >= " + num(loss[2]));
  return v;
}

// ---- determinism

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "charcoal");
  std::ostringstream out, err;
  const int rc = cli::run(args, out, err);
  if (out_text) *out_text = out.str();
  if (rc != 0) std::cerr << err.str();
  return rc;
}

Verdict determinism() {
  Verdict v;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "charcoal_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto path = [&](const std::string& name) { return (dir / name).string(); };

  // Library entry points.
  {
    Scenario s = single_scenario("d", 300, 60, 3, 4.0, {Estimator::soft, Estimator::proj, Estimator::lasso_bic});
    BenchmarkConfig cfg;
    cfg.reps = 6;
    cfg.seed = 9;
    cfg.threads = 1;
    const auto a = run_benchmark({s}, cfg);
    cfg.threads = 4;
    const auto b = run_benchmark({s}, cfg);
    bool same = a.records.size() == b.records.size();
    for (std::size_t i = 0; same && i < a.records.size(); ++i)
      same = a.records[i].estimate == b.records[i].estimate;
    v.require(same, "run_benchmark threads 1 vs 4");

    CalibrationConfig cal;
    cal.n = 200;
    cal.p = 40;
    cal.B = 60;
    cal.seed = 10;
    cal.threads = 1;
    const auto c1 = calibrate_threshold(cal);
    cal.threads = 3;
    const auto c3 = calibrate_threshold(cal);
    v.require(c1.samples == c3.samples && c1.threshold == c3.threshold, "calibrate threads 1 vs 3");

    const MultiInstance inst = generate_multi(preset_m1(1.6, 11));
    MultiConfig mc;
    mc.threshold = 3.0;
    mc.seed = 12;
    mc.threads = 1;
    const auto m1 = detect_multiple(inst.data, mc);
    mc.threads = 3;
    const auto m3 = detect_multiple(inst.data, mc);
    v.require(m1.raw == m3.raw && m1.refined == m3.refined, "detect_multiple threads 1 vs 3");

    SimConfig sc;
    sc.seed = 13;
    const auto g1 = generate_single(sc);
    const auto g2 = generate_single(sc);
    v.require(std::ranges::equal(g1.data.design.data(), g2.data.design.data()) &&
                  g1.data.response == g2.data.response,
              "generate_single repeat");
  }

  // Commands.
  bool ok = cli({"simulate", "--n", "300", "--p", "60", "--seed", "7", "-o", path("a.csv")}) == 0 &&
            cli({"simulate", "--n", "300", "--p", "60", "--seed", "7", "-o", path("b.csv")}) == 0;
  v.require(ok && slurp(path("a.csv")) == slurp(path("b.csv")) &&
                slurp(path("a.truth.json")) == slurp(path("b.truth.json")),
            "simulate");

  ok = cli({"simulate", "--preset", "M1", "--rho-min", "1.6", "--seed", "3", "-o", path("m.csv")}) == 0;
  std::string r1, r2;
  for (const std::string& mode : {std::string("proj"), std::string("lasso-bic")}) {
    ok = cli({"--threads", "1", "detect", path("a.csv"), "--method", mode, "--trace", path("t1.csv")}, &r1) == 0 &&
         cli({"--threads", "4", "detect", path("a.csv"), "--method", mode, "--trace", path("t2.csv")}, &r2) == 0;
    const auto strip = [&](std::string s) {
      const auto pos = s.find("\"trace_file\"");
      return pos == std::string::npos ? s : s.substr(0, pos);
    };
    v.require(ok && strip(r1) == strip(r2) && slurp(path("t1.csv")) == slurp(path("t2.csv")),
              "detect " + mode);
  }
  ok = cli({"--threads", "1", "detect", path("m.csv"), "--multi", "--calibration-b", "60"}, &r1) == 0 &&
       cli({"--threads", "4", "detect", path("m.csv"), "--multi", "--calibration-b", "60"}, &r2) == 0;
  v.require(ok && r1 == r2, "detect --multi threads 1 vs 4");

  ok = cli({"--threads", "1", "calibrate", "--n", "200", "--p", "40", "--b", "60", "--seed", "5"}, &r1) == 0 &&
       cli({"--threads", "4", "calibrate", "--n", "200", "--p", "40", "--b", "60", "--seed", "5"}, &r2) == 0;
  v.require(ok && r1 == r2, "calibrate threads 1 vs 4");

  const std::vector<std::string> bench{"benchmark", "--preset", "table1", "--scenario", "n600-p200-k3-rho4",
                                       "--reps", "3", "--seed", "2", "--no-timing"};
  auto with = [&](const std::string& threads, const std::string& csv) {
    std::vector<std::string> a{"--threads", threads};
    a.insert(a.end(), bench.begin(), bench.end());
    a.push_back("--csv");
    a.push_back(path(csv));
    return a;
  };
  ok = cli(with("1", "b1.csv"), &r1) == 0 && cli(with("4", "b4.csv"), &r2) == 0;
  v.require(ok && r1 == r2 && slurp(path("b1.csv")) == slurp(path("b4.csv")),
            "benchmark threads 1 vs 4");
  fs::remove_all(dir);
  return v;
}

struct Criterion {
  const char* id;
  const char* title;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"1", "exact algebra", exact_algebra},
      {"2", "oracle suite", oracle_suite},
      {"3", "Monte-Carlo mean of W_t'W_z", cross_gram_mean},
      {"4", "single change n=600 p=200 RMSE", table1},
      {"5", "single change n=1200 p=400 mean loss", table2},
      {"6", "test size and power", test_validity},
      {"7", "multiple changes, setting M1", multi_m1},
      {"8", "robustness trend, t4 noise and AR design", robustness},
      {"9", "determinism", determinism},
  };
  const std::string which = argc > 1 ? argv[1] : "all";
  bool all_pass = true, matched = false;
  for (const Criterion& c : criteria) {
    if (which != "all" && which != c.id) continue;
    matched = true;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << c.id << " (" << c.title << "): " << (v.pass ? "PASS" : "FAIL")
              << " - " << v.detail << " [" << num(secs, 3) << " s]" << std::endl;
    all_pass = all_pass && v.pass;
  }
  if (!matched) {
    std::cerr << "unknown criterion '" << which << "' (1-9 or all)\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
