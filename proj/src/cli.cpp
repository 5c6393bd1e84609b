#include "qecdm/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qecdm/config.hpp"

namespace qecdm {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", x);
  return buf;
}

// JSON has no infinity; unbounded values become null.
ojson jnum(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

struct Context {
  RunConfig cfg;
  std::string command;
  std::ostream& out;
  std::ostream& err;
  fs::path dir;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  ojson points = ojson::array();
  std::vector<std::string> files;

  void write(const std::string& name, const std::string& content) {
    write_file_atomic((dir / name).string(), content);
    files.push_back(name);
  }

  void record_point(const std::string& label, const PointResult& p) {
    ojson j;
    if (!label.empty()) j["label"] = label;
    j["gamma"] = p.gamma;
    j["ok"] = p.ok;
    if (!p.ok) j["note"] = p.note;
    j["steps"] = p.series.samples.size();
    j["early_stopped"] = p.series.early_stopped;
    j["tau"] = p.series.tau;
    j["expected_tau"] = p.series.expected_tau;
    j["max_branch_count"] = p.series.max_branch_count;
    points.push_back(std::move(j));
  }

  void finish(int exit_code) {
    ojson m;
    m["tool"] = "qecdm";
    m["version"] = QECDM_VERSION;
    m["model_revision"] = kModelRevision;
    m["command"] = command;
    m["exit_code"] = exit_code;
    m["config"] = cfg.to_json();
    m["files"] = files;
    m["points"] = points;
    m["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file_atomic((dir / "manifest.json").string(), m.dump(2) + "\n");
  }
};

std::string curve_header() { return "gamma,Gamma_n,Gamma_t,residual,branch_count\n"; }

std::string curve_row(const PointResult& p) {
  std::ostringstream os;
  const double inf = std::numeric_limits<double>::infinity();
  os << num(p.gamma) << ',' << num(p.ok ? p.fit.gamma_n : inf) << ',' << num(p.ok ? p.fit.gamma_t : inf) << ','
     << num(p.ok ? p.fit.residual : inf) << ',' << p.series.max_branch_count << '\n';
  return os.str();
}

std::string baseline_csv(const std::vector<PointResult>& pts) {
  std::ostringstream os;
  os << "gamma,Gamma_n,Gamma_t,residual\n";
  for (const auto& p : pts)
    os << num(p.gamma) << ',' << num(p.bare_fit.gamma_n) << ',' << num(p.bare_fit.gamma_t) << ','
       << num(p.bare_fit.residual) << '\n';
  return os.str();
}

ojson threshold_json(const ThresholdResult* r, const std::vector<double>& grid) {
  ojson j;
  j["gamma_star"] = r ? jnum(r->gamma_star) : ojson(nullptr);
  j["bracket"] = r ? ojson::array({r->bracket.first, r->bracket.second}) : ojson(nullptr);
  j["grid"] = grid;
  return j;
}

void append_series(std::ostringstream& os, double g0, double g1, const CrashSeries& s) {
  for (const auto& x : s.samples) os << num(g0) << ',' << num(g1) << ',' << x.n << ',' << num(x.t) << ',' << num(x.p) << '\n';
}

ojson fit_json(double g0, double g1, const CrashSeries& s, const RateFit& f) {
  ojson j;
  j["gamma0"] = g0;
  j["gamma1"] = g1;
  j["Gamma_n"] = f.gamma_n;
  j["Gamma_t"] = f.gamma_t;
  j["residual"] = f.residual;
  j["tau"] = s.tau;
  j["expected_tau"] = s.expected_tau;
  j["early_stopped"] = s.early_stopped;
  j["max_branch_count"] = s.max_branch_count;
  return j;
}

int cmd_run(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ExperimentDescriptor desc = cfg.descriptor();
  std::ostringstream csv;
  csv << "gamma0,gamma1,n,t,P_c\n";
  ojson fits = ojson::array();
  if (cfg.has_sweep()) {
    const auto pts = evaluate_grid(desc, cfg.grid());
    for (const auto& p : pts) {
      const NoiseModel m = noise_for(cfg.noise, p.gamma, cfg.bath);
      append_series(csv, m.gamma0, m.gamma1, p.series);
      ojson j = p.ok ? fit_json(m.gamma0, m.gamma1, p.series, p.fit) : ojson{{"gamma0", m.gamma0}, {"gamma1", m.gamma1}};
      j["ok"] = p.ok;
      if (!p.ok) j["note"] = p.note;
      fits.push_back(std::move(j));
      ctx.record_point("", p);
    }
  } else {
    QecSettings s = desc.settings(0.0);
    s.noise = cfg.point_noise();
    const StabilizerCode code = code_by_name(cfg.code);
    const CrashSeries series = cfg.experiment == ExperimentKind::Memory
                                   ? memory_experiment(code, cfg.protocol, s, desc.options)
                                   : logical_x_experiment(code, cfg.protocol, s, desc.options);
    append_series(csv, cfg.gamma0, cfg.gamma1, series);
    fits.push_back(fit_json(cfg.gamma0, cfg.gamma1, series, fit_crash_rate(series)));
    PointResult p;
    p.series = series;
    ctx.record_point("", p);
  }
  ctx.write("series.csv", csv.str());
  ctx.write("fit.json", fits.dump(2) + "\n");
  ctx.out << "wrote " << (ctx.dir / "series.csv").string() << '\n';
  return 0;
}

int cmd_threshold(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  if (!cfg.has_sweep()) throw ConfigError("threshold needs sweep_start, sweep_stop and sweep_points");
  const auto grid = cfg.grid();
  check_grid(grid);
  std::vector<PointResult> pts;
  std::optional<ThresholdResult> result;
  int code = 0;
  try {
    result = threshold_scan(cfg.descriptor(), grid, cfg.refine, &pts);
  } catch (const NoCrossing& e) {
    if (pts.empty()) pts = evaluate_grid(cfg.descriptor(), grid);
    ctx.err << e.what() << '\n';
    code = 3;
  }
  std::ostringstream csv;
  csv << curve_header();
  for (const auto& p : pts) {
    csv << curve_row(p);
    ctx.record_point("", p);
  }
  ctx.write("curve.csv", csv.str());
  ctx.write("baseline.csv", baseline_csv(pts));
  ctx.write("threshold.json", threshold_json(result ? &*result : nullptr, grid).dump(2) + "\n");
  if (result) ctx.out << "gamma_star = " << num(result->gamma_star) << '\n';
  return code;
}

int cmd_compare(Context& ctx, const std::string& axis) {
  const RunConfig& cfg = ctx.cfg;
  if (!cfg.has_sweep()) throw ConfigError("compare needs sweep_start, sweep_stop and sweep_points");
  const auto grid = cfg.grid();
  std::vector<std::pair<std::string, ExperimentDescriptor>> variants;
  const ExperimentDescriptor base = cfg.descriptor();
  if (axis == "protocol") {
    for (Protocol p : {Protocol::A, Protocol::B}) {
      auto d = base;
      d.protocol = p;
      variants.emplace_back(to_string(p), d);
    }
  } else if (axis == "bath") {
    for (Bath b : {Bath::Distinct, Bath::Collective}) {
      auto d = base;
      d.bath = b;
      if (b == Bath::Collective && d.integrator.method == Integrator::Exact) d.integrator.method = Integrator::Auto;
      variants.emplace_back(to_string(b), d);
    }
  } else if (axis == "parallelism") {
    for (Parallelism l : {Parallelism::Sequential, Parallelism::Increased, Parallelism::Maximal}) {
      auto d = base;
      d.level = l;
      variants.emplace_back(to_string(l), d);
    }
  } else {
    throw ConfigError("compare axis must be protocol, bath or parallelism");
  }
  std::ostringstream csv;
  csv << "label," << curve_header();
  ojson summary = ojson::object();
  std::vector<PointResult> first;
  for (const auto& [label, d] : variants) {
    const auto pts = evaluate_grid(d, grid);
    if (first.empty()) first = pts;
    std::vector<CurvePoint> curve;
    for (const auto& p : pts) {
      csv << label << ',' << curve_row(p);
      curve.push_back({p.gamma, p.encoded_rate(), p.bare_rate()});
      ctx.record_point(label, p);
    }
    try {
      const auto r = find_crossing(curve);
      summary[label] = threshold_json(&r, grid);
    } catch (const NoCrossing&) {
      summary[label] = threshold_json(nullptr, grid);
    }
  }
  ctx.write("compare.csv", csv.str());
  ctx.write("baseline.csv", baseline_csv(first));
  ctx.write("compare.json", summary.dump(2) + "\n");
  ctx.out << "wrote " << (ctx.dir / "compare.csv").string() << '\n';
  return 0;
}

}  // namespace

std::string version_string() {
  return std::string("qecdm ") + QECDM_VERSION + " (model revision " + std::to_string(kModelRevision) + ")";
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + tmp + "'");
    f << content;
    if (!f.flush()) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Density-matrix simulation of fault-tolerant error correction under control noise", "qecdm"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  std::string config_path, axis;
  std::optional<double> dt;
  std::optional<int> steps;
  std::optional<std::string> out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "configuration file")->required();
    sub->add_option("--dt", dt, "integrator time step");
    sub->add_option("--steps", steps, "computational steps per experiment");
    sub->add_option("--out", out_dir, "output directory");
  };
  auto* run = app.add_subcommand("run", "run the configured experiment(s)");
  add_common(run);
  auto* threshold = app.add_subcommand("threshold", "locate the noise threshold over the sweep");
  add_common(threshold);
  auto* compare = app.add_subcommand("compare", "curves varying one axis");
  add_common(compare);
  compare->add_option("--axis", axis, "protocol | bath | parallelism")->required();
  auto* validate = app.add_subcommand("validate-config", "check a configuration file");
  add_common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (dt) cfg.dt = *dt;
    if (steps) cfg.n_steps = *steps;
    if (out_dir) cfg.output_dir = *out_dir;
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    err << "invalid config: " << e.what() << '\n';
    return 2;
  }
  if (validate->parsed()) {
    out << "config ok\n";
    return 0;
  }

  Context ctx{cfg, "", out, err, fs::path(cfg.output_dir), std::chrono::steady_clock::now(), ojson::array(), {}};
  ctx.command = run->parsed() ? "run" : threshold->parsed() ? "threshold" : "compare --axis " + axis;
  int code = 0;
  try {
    fs::create_directories(ctx.dir);
    if (run->parsed()) code = cmd_run(ctx);
    else if (threshold->parsed()) code = cmd_threshold(ctx);
    else code = cmd_compare(ctx, axis);
  } catch (const ConfigError& e) {
    err << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "simulation error: " << e.what() << '\n';
    code = 1;
  }
  try {
    ctx.finish(code);
  } catch (const std::exception& e) {
    err << "cannot write manifest: " << e.what() << '\n';
    return 1;
  }
  return code;
}

}  // namespace qecdm
