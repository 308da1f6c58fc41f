#include "charcoal/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "charcoal/benchmark.hpp"
#include "charcoal/error.hpp"
#include "charcoal/io.hpp"
#include "charcoal/multi.hpp"
#include "charcoal/rng.hpp"
#include "charcoal/simulate.hpp"
#include "charcoal/single.hpp"

namespace charcoal::cli {

using nlohmann::ordered_json;

namespace {

template <class T>
ordered_json opt_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

template <class T>
std::optional<T> json_opt(const ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
  if (!f) throw ConfigError("write failed: " + path);
}

// Writes to `path`, or to `out` when the path is empty or "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_text(path, text);
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json read_json(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path);
  try {
    return ordered_json::parse(f);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(path + ": " + e.what(), 0, e.byte);
  }
}

// ---------------------------------------------------------------- detect

struct DetectOptions {
  std::string input;
  std::string method = "proj";
  double lambda_c = 0.5;
  std::optional<double> alpha;
  bool multi = false;
  std::size_t intervals = 200;
  std::optional<double> level;
  std::uint64_t seed = 0;
  std::optional<double> sigma;
  std::optional<double> threshold;
  std::size_t calibration_b = 1000;
  double varpi = 0.0;
  std::string refine = "lasso-bic";

  double resolved_alpha() const { return alpha.value_or(multi ? 0.05 : 0.0); }

  ordered_json to_json() const {
    ordered_json j;
    j["input"] = input;
    j["method"] = method;
    j["lambda_c"] = lambda_c;
    j["alpha"] = resolved_alpha();
    j["multi"] = multi;
    j["intervals"] = intervals;
    j["level"] = opt_json(level);
    j["seed"] = seed;
    j["sigma"] = opt_json(sigma);
    j["threshold"] = opt_json(threshold);
    j["calibration_b"] = calibration_b;
    j["varpi"] = varpi;
    j["refine"] = refine;
    return j;
  }

  static DetectOptions from_json(const ordered_json& j) {
    DetectOptions o;
    o.input = j.at("input").get<std::string>();
    o.method = j.at("method").get<std::string>();
    o.lambda_c = j.at("lambda_c").get<double>();
    o.alpha = j.at("alpha").get<double>();
    o.multi = j.at("multi").get<bool>();
    o.intervals = j.at("intervals").get<std::size_t>();
    o.level = json_opt<double>(j, "level");
    o.seed = j.at("seed").get<std::uint64_t>();
    o.sigma = json_opt<double>(j, "sigma");
    o.threshold = json_opt<double>(j, "threshold");
    o.calibration_b = j.at("calibration_b").get<std::size_t>();
    o.varpi = j.at("varpi").get<double>();
    o.refine = j.at("refine").get<std::string>();
    return o;
  }
};

struct TracePoint {
  std::size_t t;
  double value;
};

std::string trace_csv(const std::vector<TracePoint>& trace, const std::string& label) {
  std::string s = "t," + label + "\n";
  for (const auto& [t, v] : trace) s += std::to_string(t) + "," + format_double(v) + "\n";
  return s;
}

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string trace_svg(const std::vector<TracePoint>& trace, const std::string& label,
                      const std::vector<std::size_t>& marks) {
  const double width = 800, height = 400, left = 60, right = 20, top = 20, bottom = 40;
  const double pw = width - left - right, ph = height - top - bottom;
  double lo = 0.0, hi = 1.0;
  std::size_t t0 = 0, t1 = 1;
  if (!trace.empty()) {
    lo = hi = trace.front().value;
    for (const auto& pt : trace) {
      lo = std::min(lo, pt.value);
      hi = std::max(hi, pt.value);
    }
    if (hi <= lo) hi = lo + 1.0;
    t0 = trace.front().t;
    t1 = std::max(trace.back().t, t0 + 1);
  }
  auto sx = [&](double t) {
    return left + pw * (t - static_cast<double>(t0)) / static_cast<double>(t1 - t0);
  };
  auto sy = [&](double v) { return top + ph * (1.0 - (v - lo) / (hi - lo)); };
  char buf[128];
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (std::size_t z : marks) {
    if (z < t0 || z > t1) continue;
    std::snprintf(buf, sizeof buf, "%.2f", sx(static_cast<double>(z)));
    os << "<line x1=\"" << buf << "\" x2=\"" << buf << "\" y1=\"" << top << "\" y2=\""
       << top + ph << "\" stroke=\"#c33\" stroke-dasharray=\"4 3\"/>\n";
  }
  os << "<polyline fill=\"none\" stroke=\"#246\" stroke-width=\"1.2\" points=\"";
  for (const auto& pt : trace) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx(static_cast<double>(pt.t)), sy(pt.value));
    os << buf;
  }
  os << "\"/>\n";
  auto text = [&](double x, double y, const std::string& s, const char* anchor) {
    std::snprintf(buf, sizeof buf, "%.2f", x);
    os << "<text x=\"" << buf;
    std::snprintf(buf, sizeof buf, "%.2f", y);
    os << "\" y=\"" << buf << "\" text-anchor=\"" << anchor << "\">" << svg_escape(s)
       << "</text>\n";
  };
  text(left, height - 15, std::to_string(t0), "start");
  text(left + pw, height - 15, std::to_string(t1), "end");
  text(left + pw / 2, height - 5, "t", "middle");
  std::snprintf(buf, sizeof buf, "%.4g", hi);
  text(left - 5, top + 10, buf, "end");
  std::snprintf(buf, sizeof buf, "%.4g", lo);
  text(left - 5, top + ph, buf, "end");
  text(left + 5, top + 15, label, "start");
  os << "</svg>\n";
  return os.str();
}

std::vector<TracePoint> to_trace(const SingleEstimate& est) {
  std::vector<TracePoint> out;
  for (std::size_t j = 0; j < est.trace.size(); ++j) out.push_back({est.window.lo + j, est.trace[j]});
  return out;
}

ordered_json index_array(const std::vector<std::size_t>& v) { return ordered_json(v); }

int cmd_detect(const DetectOptions& o, const std::string& output, const std::string& trace_path,
               const std::string& plot_path, std::optional<std::size_t> threads, std::ostream& out) {
  if (o.method != "proj" && o.method != "lasso-bic")
    throw ConfigError("--method must be proj or lasso-bic");
  if (o.refine != "proj" && o.refine != "lasso-bic")
    throw ConfigError("--refine must be proj or lasso-bic");
  if (!(o.lambda_c >= 0.0)) throw ConfigError("--lambda-c must be non-negative");
  if (o.sigma && !(*o.sigma > 0.0)) throw ConfigError("--sigma must be positive");
  const double alpha = o.resolved_alpha();

  const RegressionData data = read_csv_file(o.input);
  const std::size_t n = data.n();
  const std::size_t p = data.p();
  const double lnp = std::log(static_cast<double>(p));

  ordered_json report;
  report["mode"] = o.multi ? "multi" : "single";
  std::vector<TracePoint> trace;
  std::string trace_label;
  std::vector<std::size_t> marks;

  if (!o.multi) {
    if (n <= p)
      throw DimensionError("n = " + std::to_string(n) + " rows but p = " + std::to_string(p) +
                           " covariates: the complementary sketch needs n > p");
    if (p < 2) throw DimensionError("detection needs p >= 2 covariates");
    const QMatrix q = q_matrix(data, alpha, QVariant::diag);
    const double sigma = o.sigma ? *o.sigma : estimate_sigma_mad(q);
    const double lam = o.lambda_c * sigma * lnp;
    SingleEstimate est;
    if (o.method == "proj") {
      est = estimate_proj(q, lam, o.seed);
      trace_label = "abs_projection";
    } else {
      LassoStrategy strategy;
      strategy.sigma = sigma;
      est = estimate_lasso_bic(data, alpha, strategy);
      trace_label = "bic_score";
    }
    const double h = est.h_max ? *est.h_max : soft_h_max(q, lam);
    report["changepoints"] = index_array({est.location});
    report["h_max"] = h;
    report["sigma_tilde"] = sigma;
    report["lambda"] = lam;
    report["threshold_T"] = opt_json(o.threshold);
    if (o.threshold) report["reject"] = sigma > 0.0 && h / sigma >= *o.threshold;
    report["config"] = o.to_json();
    report["stages"] = {{"raw", index_array({est.location})},
                        {"pruned", index_array({est.location})},
                        {"refined", index_array({est.location})}};
    if (est.fallback) report["fallback"] = true;
    if (est.unconverged) report["unconverged_fits"] = est.unconverged;
    trace = to_trace(est);
    marks = {est.location};
  } else {
    MultiConfig mc;
    mc.M = o.intervals;
    mc.varpi = o.varpi;
    mc.alpha = alpha;
    mc.lam_coef = o.lambda_c;
    mc.sigma = o.sigma;
    mc.refine = o.refine == "proj" ? RefineMethod::proj : RefineMethod::lasso_bic;
    mc.seed = o.seed;
    mc.threads = threads;
    std::optional<double> level = o.level;
    if (o.threshold) {
      mc.threshold = *o.threshold;
    } else {
      CalibrationConfig cal;
      cal.n = n;
      cal.p = p;
      cal.alpha = alpha;
      cal.lam_coef = o.lambda_c;
      cal.B = o.calibration_b;
      cal.M = o.intervals;
      cal.level = o.level;
      cal.plug_in_sigma = !o.sigma;
      cal.seed = derive_seed(o.seed, 0xca1b);
      cal.threads = threads;
      const Calibration c = calibrate_threshold(cal);
      mc.threshold = c.threshold;
      level = c.level;
    }
    const MultiResult res = detect_multiple(data, mc);
    report["changepoints"] = index_array(res.refined);
    double h = 0.0;
    for (const Candidate& c : res.candidates) h = std::max(h, c.statistic);
    report["h_max"] = h;
    report["sigma_tilde"] = res.sigma;
    report["lambda"] = res.lambda;
    report["threshold_T"] = res.threshold;
    report["level"] = opt_json(level);
    report["config"] = o.to_json();
    report["stages"] = {{"raw", index_array(res.raw)},
                        {"pruned", index_array(res.pruned)},
                        {"midpoint", index_array(res.midpoint)},
                        {"refined", index_array(res.refined)}};
    report["intervals_skipped"] = res.trace.skipped;
    marks = res.refined;
    if (n > p && (!trace_path.empty() || !plot_path.empty())) {
      const QMatrix q = q_matrix(data, alpha, QVariant::diag);
      const double s = o.sigma ? *o.sigma : estimate_sigma_mad(q);
      trace = to_trace(estimate_proj(q, o.lambda_c * s * lnp, o.seed));
      trace_label = "abs_projection";
    }
  }
  if (!trace_path.empty()) {
    write_text(trace_path, trace_csv(trace, trace_label));
    report["trace_file"] = trace_path;
  }
  if (!plot_path.empty()) write_text(plot_path, trace_svg(trace, trace_label, marks));
  emit(output, dump(report), out);
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::size_t n = 600, p = 200, k = 3;
  double rho = 4.0, tau = 0.3, sigma = 1.0;
  std::string design = "gauss", noise = "gauss";
  std::uint64_t seed = 0;
  std::string preset;
  double rho_min = 1.6;
  std::vector<std::size_t> changepoints;
  std::vector<double> magnitudes;
  std::string output, truth;
};

int cmd_simulate(const SimulateOptions& o, const CLI::App& sub, std::ostream& out) {
  const Design design = parse_design(o.design);
  const Noise noise = parse_noise(o.noise);
  const bool custom_multi = sub.count("--changepoints") > 0;
  if (!o.preset.empty() && (custom_multi || sub.count("--tau") || sub.count("--rho") ||
                            sub.count("--n") || sub.count("--p")))
    throw ConfigError("--preset fixes n, p, the changepoints and magnitudes");
  if (!o.preset.empty() && o.preset != "M1" && o.preset != "M2")
    throw ConfigError("--preset must be M1 or M2");
  if (o.preset.empty() && sub.count("--rho-min"))
    throw ConfigError("--rho-min needs --preset");
  if (custom_multi && (sub.count("--tau") || sub.count("--rho")))
    throw ConfigError("--changepoints replaces --tau and --rho");
  if (custom_multi != (sub.count("--magnitudes") > 0) ||
      o.changepoints.size() != o.magnitudes.size())
    throw ConfigError("--changepoints and --magnitudes must be given together with equal length");

  ordered_json config;
  RegressionData data;
  std::vector<std::size_t> cps;
  std::vector<double> norms;
  std::size_t n = o.n, p = o.p;
  if (o.preset.empty() && !custom_multi) {
    SimConfig cfg;
    cfg.n = o.n;
    cfg.p = o.p;
    cfg.k = o.k;
    cfg.rho = o.rho;
    cfg.tau = o.tau;
    cfg.sigma = o.sigma;
    cfg.design = design;
    cfg.noise = noise;
    cfg.seed = o.seed;
    SingleInstance inst = generate_single(cfg);
    data = std::move(inst.data);
    cps = {inst.z};
    norms = {norm2(inst.theta)};
    config = {{"kind", "single"}, {"n", o.n},         {"p", o.p},
              {"k", o.k},         {"rho", o.rho},     {"tau", o.tau},
              {"sigma", o.sigma}, {"design", o.design}, {"noise", o.noise}};
  } else {
    MultiSpec spec;
    if (!o.preset.empty()) {
      spec = o.preset == "M1" ? preset_m1(o.rho_min, o.seed) : preset_m2(o.rho_min, o.seed);
    } else {
      spec.n = o.n;
      spec.p = o.p;
      spec.changepoints = o.changepoints;
      spec.magnitudes = o.magnitudes;
    }
    spec.k = o.k;
    spec.sigma = o.sigma;
    spec.design = design;
    spec.noise = noise;
    spec.seed = o.seed;
    MultiInstance inst = generate_multi(spec);
    data = std::move(inst.data);
    cps = inst.changepoints;
    for (const Vector& th : inst.thetas) norms.push_back(norm2(th));
    n = spec.n;
    p = spec.p;
    config = {{"kind", "multi"}, {"n", spec.n}, {"p", spec.p}, {"k", spec.k}};
    if (!o.preset.empty()) {
      config["preset"] = o.preset;
      config["rho_min"] = o.rho_min;
    }
    config["changepoints"] = spec.changepoints;
    config["magnitudes"] = spec.magnitudes;
    config["sigma"] = o.sigma;
    config["design"] = o.design;
    config["noise"] = o.noise;
  }

  ordered_json truth;
  truth["n"] = n;
  truth["p"] = p;
  truth["changepoints"] = cps;
  truth["theta_norms"] = norms;
  truth["seed"] = o.seed;
  truth["config"] = config;

  if (o.output.empty() || o.output == "-") {
    write_csv(out, data);
  } else {
    write_csv_file(o.output, data);
  }
  std::string truth_path = o.truth;
  if (truth_path.empty() && !o.output.empty() && o.output != "-") {
    truth_path = o.output;
    if (truth_path.ends_with(".csv")) truth_path.resize(truth_path.size() - 4);
    truth_path += ".truth.json";
  }
  if (!truth_path.empty()) write_text(truth_path, dump(truth));
  return kExitOk;
}

// ---------------------------------------------------------------- calibrate

struct CalibrateOptions {
  std::size_t n = 600, p = 200, B = 1000, M = 200;
  std::optional<double> level;
  double alpha = 0.05, lambda_c = 0.5;
  bool known_sigma = false;
  bool samples = false;
  std::uint64_t seed = 0;
  std::string output;
};

int cmd_calibrate(const CalibrateOptions& o, std::optional<std::size_t> threads, std::ostream& out) {
  CalibrationConfig cfg;
  cfg.n = o.n;
  cfg.p = o.p;
  cfg.alpha = o.alpha;
  cfg.lam_coef = o.lambda_c;
  cfg.B = o.B;
  cfg.M = o.M;
  cfg.level = o.level;
  cfg.plug_in_sigma = !o.known_sigma;
  cfg.seed = o.seed;
  cfg.threads = threads;
  const Calibration c = calibrate_threshold(cfg);
  ordered_json j;
  j["T"] = c.threshold;
  if (c.gev)
    j["gev_params"] = {{"location", c.gev->location}, {"scale", c.gev->scale},
                       {"shape", c.gev->shape}};
  else
    j["gev_params"] = "empirical-fallback";
  j["B"] = o.B;
  j["level"] = c.level;
  j["seed"] = o.seed;
  j["config"] = {{"n", o.n},         {"p", o.p},
                 {"M", o.M},         {"alpha", o.alpha},
                 {"lambda_c", o.lambda_c}, {"known_sigma", o.known_sigma}};
  if (o.samples) j["samples"] = c.samples;
  emit(o.output, dump(j), out);
  return kExitOk;
}

// ---------------------------------------------------------------- benchmark

struct BenchmarkOptions {
  std::string preset;
  std::size_t reps = 100;
  std::uint64_t seed = 0;
  std::string scenario;
  std::size_t calibration_b = 1000;
  std::optional<double> threshold;
  std::string csv, summary;
  bool no_timing = false;
};

int cmd_benchmark(const BenchmarkOptions& o, std::optional<std::size_t> threads, std::ostream& out) {
  if (o.reps < 1) throw ConfigError("--reps must be at least 1");
  std::vector<Scenario> scenarios = benchmark_preset(o.preset);
  if (!o.scenario.empty()) {
    std::erase_if(scenarios,
                  [&](const Scenario& s) { return s.name.find(o.scenario) == std::string::npos; });
    if (scenarios.empty()) throw ConfigError("no scenario of " + o.preset + " matches '" + o.scenario + "'");
  }
  BenchmarkConfig cfg;
  cfg.reps = o.reps;
  cfg.seed = o.seed;
  cfg.calibration_B = o.calibration_b;
  cfg.threshold = o.threshold;
  cfg.threads = threads;
  const BenchmarkResult res = run_benchmark(scenarios, cfg);

  std::string csv = "scenario,rep,estimator,estimate,loss,nu_error,hausdorff,ari,seconds\n";
  for (const RepRecord& r : res.records) {
    csv += r.scenario + "," + std::to_string(r.rep) + "," + to_string(r.estimator) + ",";
    if (r.estimator == Estimator::multi)
      csv += ",," + std::to_string(r.nu_error) + "," + format_double(r.hausdorff) + "," +
             format_double(r.ari);
    else
      csv += std::to_string(r.estimate) + "," + format_double(r.loss) + ",,,";
    csv += ",";
    if (!o.no_timing) csv += format_double(r.seconds);
    csv += "\n";
  }

  ordered_json summary;
  summary["preset"] = o.preset;
  summary["reps"] = o.reps;
  summary["seed"] = o.seed;
  if (!o.scenario.empty()) summary["scenario_filter"] = o.scenario;
  ordered_json th = ordered_json::object();
  for (const auto& [key, t] : res.thresholds) th[key] = t;
  if (!res.thresholds.empty()) summary["thresholds"] = th;
  ordered_json rows = ordered_json::array();
  for (const Aggregate& a : res.aggregates) {
    ordered_json row;
    row["scenario"] = a.scenario;
    row["estimator"] = to_string(a.estimator);
    row["reps"] = a.reps;
    if (a.estimator == Estimator::multi) {
      row["nu_error_counts"] = {{"<=-2", a.nu_counts[0]}, {"-1", a.nu_counts[1]},
                                {"0", a.nu_counts[2]},    {"1", a.nu_counts[3]},
                                {">=2", a.nu_counts[4]}};
      row["mean_hausdorff"] = a.mean_hausdorff;
      row["mean_ari"] = a.mean_ari;
    } else {
      row["mean_abs_error"] = a.mean_loss;
      row["rmse"] = a.rmse;
    }
    if (!o.no_timing) row["mean_seconds"] = a.mean_seconds;
    rows.push_back(std::move(row));
  }
  summary["aggregates"] = rows;

  if (!o.csv.empty()) write_text(o.csv, csv);
  emit(o.summary, dump(summary), out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Changepoint detection in high-dimensional linear regression"};
  app.name(args.empty() ? "charcoal" : args[0]);
  app.require_subcommand(1);
  std::optional<std::size_t> threads;
  app.add_option("--threads", threads, "Worker threads (default: CHARCOAL_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  DetectOptions det;
  std::string det_output, det_trace, det_plot, det_replay;
  auto* detect = app.add_subcommand("detect", "Estimate changepoints in a data CSV");
  detect->add_option("input", det.input, "Data CSV with header x1,...,xp,y");
  detect->add_option("--method", det.method, "Single-change estimator")
      ->check(CLI::IsMember({"proj", "lasso-bic"}));
  detect->add_option("--lambda-c", det.lambda_c, "lambda = c * sigma * ln p");
  detect->add_option("--alpha", det.alpha, "Burn-in fraction (default 0 single, 0.05 multi)");
  detect->add_flag("--multi", det.multi, "Multiple-changepoint detection");
  detect->add_option("--intervals", det.intervals, "Random intervals M")->check(CLI::PositiveNumber);
  detect->add_option("--level", det.level, "Calibration tail level (default 0.01/M)");
  detect->add_option("--seed", det.seed);
  detect->add_option("--sigma", det.sigma, "Known noise level (default: MAD estimate)");
  detect->add_option("--threshold", det.threshold, "Test threshold; skips calibration");
  detect->add_option("--calibration-b", det.calibration_b, "Null replicates for calibration");
  detect->add_option("--varpi", det.varpi, "Interval trimming fraction");
  detect->add_option("--refine", det.refine, "Estimator for the refinement stages")
      ->check(CLI::IsMember({"proj", "lasso-bic"}));
  detect->add_option("--output,-o", det_output, "Report JSON (default stdout)");
  detect->add_option("--trace", det_trace, "Statistic trace CSV");
  detect->add_option("--plot", det_plot, "SVG chart of the trace");
  detect->add_option("--replay", det_replay, "Rerun with the config of an earlier report")
      ->excludes("input");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic regression data");
  simulate->add_option("--n", sim.n);
  simulate->add_option("--p", sim.p);
  simulate->add_option("--k", sim.k, "Sparsity of each change");
  simulate->add_option("--rho", sim.rho, "Change magnitude ||theta||_2");
  simulate->add_option("--tau", sim.tau, "Change location as a fraction of n");
  simulate->add_option("--sigma", sim.sigma, "Noise scale");
  simulate->add_option("--design", sim.design)->check(CLI::IsMember({"gauss", "ar", "rademacher"}));
  simulate->add_option("--noise", sim.noise)
      ->check(CLI::IsMember({"gauss", "t4", "t6", "exp", "rademacher"}));
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("--preset", sim.preset, "Multiple-change setting M1 or M2");
  simulate->add_option("--rho-min", sim.rho_min, "Smallest change magnitude for --preset");
  simulate->add_option("--changepoints", sim.changepoints, "Custom changepoint list")->delimiter(',');
  simulate->add_option("--magnitudes", sim.magnitudes, "Magnitudes for --changepoints")->delimiter(',');
  simulate->add_option("--output,-o", sim.output, "Data CSV (default stdout)");
  simulate->add_option("--truth", sim.truth, "Truth JSON (default <output>.truth.json)");

  CalibrateOptions cal;
  auto* calibrate = app.add_subcommand("calibrate", "Monte-Carlo test threshold");
  calibrate->add_option("--n", cal.n);
  calibrate->add_option("--p", cal.p);
  calibrate->add_option("--b,-B", cal.B, "Null replicates");
  calibrate->add_option("--intervals,-M", cal.M, "Number of intervals M");
  calibrate->add_option("--level", cal.level, "Tail level (default 0.01/M)");
  calibrate->add_option("--alpha", cal.alpha, "Burn-in fraction");
  calibrate->add_option("--lambda-c", cal.lambda_c);
  calibrate->add_flag("--known-sigma", cal.known_sigma, "Calibrate H_max at the true unit scale");
  calibrate->add_flag("--samples", cal.samples, "Include the null samples");
  calibrate->add_option("--seed", cal.seed);
  calibrate->add_option("--output,-o", cal.output, "JSON (default stdout)");

  BenchmarkOptions bench;
  auto* benchmark = app.add_subcommand("benchmark", "Run a simulation preset");
  benchmark->add_option("--preset", bench.preset, "table1, table2-charcoal, table3-M1, table3-M2, robustness")
      ->required();
  benchmark->add_option("--reps", bench.reps);
  benchmark->add_option("--seed", bench.seed);
  benchmark->add_option("--scenario", bench.scenario, "Keep scenarios whose name contains this");
  benchmark->add_option("--calibration-b", bench.calibration_b);
  benchmark->add_option("--threshold", bench.threshold, "Fixed multi threshold");
  benchmark->add_option("--csv", bench.csv, "Per-replicate CSV");
  benchmark->add_option("--summary,-o", bench.summary, "Aggregate JSON (default stdout)");
  benchmark->add_flag("--no-timing", bench.no_timing, "Omit wall-clock times");

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg, help;
    app.exit(e, help, msg);
    err << msg.str();
    return kExitUsage;
  }

  try {
    if (detect->parsed()) {
      if (!det_replay.empty()) {
        const ordered_json report = read_json(det_replay);
        if (!report.contains("config")) throw ConfigError(det_replay + " has no config object");
        try {
          det = DetectOptions::from_json(report.at("config"));
        } catch (const ordered_json::exception& e) {
          throw ConfigError(det_replay + ": bad config: " + e.what());
        }
      }
      if (det.input.empty()) throw ConfigError("detect needs an input CSV or --replay");
      return cmd_detect(det, det_output, det_trace, det_plot, threads, out);
    }
    if (simulate->parsed()) return cmd_simulate(sim, *simulate, out);
    if (calibrate->parsed()) return cmd_calibrate(cal, threads, out);
    if (benchmark->parsed()) return cmd_benchmark(bench, threads, out);
  } catch (const ParseError& e) {
    err << "parse error";
    if (e.line() > 0) err << " at line " << e.line() << ", column " << e.column();
    err << ": " << e.what() << "\n";
    return kExitData;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConvergenceError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DimensionError& e) {
    err << "dimension error: " << e.what() << "\n";
    return kExitData;
  } catch (const RankError& e) {
    err << "rank error: " << e.what() << "\n";
    return kExitData;
  } catch (const DegenerateInputError& e) {
    err << "degenerate input: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace charcoal::cli
