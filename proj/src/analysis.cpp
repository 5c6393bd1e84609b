#include "qecdm/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace qecdm {

void CrashSeries::validate() const {
  int last = 0;
  for (const auto& s : samples) {
    if (s.n <= last) throw std::invalid_argument("crash series steps must be strictly increasing");
    last = s.n;
    if (!(s.p >= 0.0 && s.p <= 0.5 + 1e-6)) throw std::invalid_argument("crash probability outside [0, 1/2]");
    if (std::abs(s.t - s.n * tau) > 1e-9 * std::max(1.0, std::abs(s.t)))
      throw std::invalid_argument("sample time does not match n * tau");
  }
}

RateFit fit_crash_rate(const CrashSeries& series) {
  const auto& s = series.samples;
  if (s.size() < 3 && !(series.early_stopped && !s.empty()))
    throw std::invalid_argument("crash-rate fit needs at least 3 samples");
  if (!(series.tau > 0.0)) throw std::invalid_argument("step duration tau must be positive");
  double prev = 0.0;
  for (const auto& x : s) {
    if (x.p >= 0.5) throw BeyondThreshold("crash probability reached 1/2; linearization undefined");
    if (x.p < prev - 1e-9) throw std::runtime_error("crash series is not monotone");
    prev = std::max(prev, x.p);
  }
  double sny = 0.0, snn = 0.0;
  std::vector<double> y;
  for (const auto& x : s) {
    y.push_back(-0.5 * std::log1p(-2.0 * x.p));
    sny += x.n * y.back();
    snn += static_cast<double>(x.n) * x.n;
  }
  RateFit fit;
  fit.gamma_n = std::max(0.0, sny / snn);
  double ss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = y[i] - fit.gamma_n * s[i].n;
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(s.size()));
  fit.gamma_t = fit.gamma_n / series.tau;
  return fit;
}

CrashSeries synthetic_series(double gamma_n, double tau, int steps) {
  CrashSeries s;
  s.tau = tau;
  s.expected_tau = tau;
  for (int n = 1; n <= steps; ++n) s.samples.push_back({n, n * tau, 0.5 * (1.0 - std::exp(-2.0 * gamma_n * n))});
  return s;
}

const char* to_string(ExperimentKind kind) { return kind == ExperimentKind::Memory ? "memory" : "logical-x"; }

ExperimentKind experiment_from_string(const std::string& name) {
  if (name == "memory") return ExperimentKind::Memory;
  if (name == "logical-x") return ExperimentKind::LogicalX;
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

const char* to_string(NoiseAxis axis) {
  switch (axis) {
    case NoiseAxis::X: return "x";
    case NoiseAxis::Z: return "z";
    case NoiseAxis::Both: return "both";
  }
  return "?";
}

NoiseAxis noise_axis_from_string(const std::string& name) {
  if (name == "x") return NoiseAxis::X;
  if (name == "z") return NoiseAxis::Z;
  if (name == "both") return NoiseAxis::Both;
  throw std::invalid_argument("unknown noise axis '" + name + "'");
}

NoiseModel noise_for(NoiseAxis axis, double gamma, Bath bath) {
  NoiseModel m;
  m.bath = bath;
  if (axis != NoiseAxis::X) m.gamma0 = gamma;
  if (axis != NoiseAxis::Z) m.gamma1 = gamma;
  m.validate();
  return m;
}

QecSettings ExperimentDescriptor::settings(double gamma) const {
  QecSettings s;
  s.noise = noise_for(axis, gamma, bath);
  s.level = level;
  s.povm = PovmError{povm_eta};
  s.integrator = integrator;
  return s;
}

CrashSeries run_experiment(const ExperimentDescriptor& desc, double gamma) {
  const StabilizerCode code = code_by_name(desc.code);
  const QecSettings settings = desc.settings(gamma);
  return desc.kind == ExperimentKind::Memory ? memory_experiment(code, desc.protocol, settings, desc.options)
                                             : logical_x_experiment(code, desc.protocol, settings, desc.options);
}

CrashSeries bare_series(const ExperimentDescriptor& desc, double gamma) {
  const NoiseModel noise = noise_for(desc.axis, gamma, Bath::Distinct);
  const DensityMatrix input = default_logical_input(code_by_name(desc.code));
  CrashSeries s;
  const bool memory = desc.kind == ExperimentKind::Memory;
  s.tau = memory ? 1.0 : kPi / 2.0;
  s.expected_tau = s.tau;
  for (int n = 1; n <= desc.options.n_steps; ++n) {
    BareExperiment e;
    e.kind = memory ? BareExperiment::Kind::Memory : BareExperiment::Kind::XGate;
    e.duration = n * s.tau;
    e.gates = n;
    const double p = bare_qubit_crash(e, noise, input, desc.integrator);
    s.samples.push_back({n, n * s.tau, p});
    if (p > desc.options.stop_at) {
      s.early_stopped = n < desc.options.n_steps;
      break;
    }
  }
  return s;
}

double PointResult::encoded_rate() const {
  if (!ok) return std::numeric_limits<double>::infinity();
  return kind == ExperimentKind::Memory ? fit.gamma_t : fit.gamma_n;
}

double PointResult::bare_rate() const {
  return kind == ExperimentKind::Memory ? bare_fit.gamma_t : bare_fit.gamma_n;
}

double PointResult::ratio() const { return encoded_rate() / bare_rate(); }

PointResult evaluate_point(const ExperimentDescriptor& desc, double gamma) {
  PointResult r;
  r.gamma = gamma;
  r.kind = desc.kind;
  r.bare_fit = fit_crash_rate(bare_series(desc, gamma));
  try {
    r.series = run_experiment(desc, gamma);
    r.fit = fit_crash_rate(r.series);
  } catch (const BeyondThreshold& e) {
    r.ok = false;
    r.note = e.what();
  }
  return r;
}

std::vector<PointResult> evaluate_grid(const ExperimentDescriptor& desc, const std::vector<double>& grid) {
  std::vector<PointResult> out(grid.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(desc.workers, static_cast<unsigned>(grid.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = evaluate_point(desc, grid[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < grid.size(); i = next++) {
        try {
          out[i] = evaluate_point(desc, grid[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<double> log_grid(double start, double stop, int points) {
  if (!(start > 0.0 && stop > start)) throw std::invalid_argument("log grid needs 0 < start < stop");
  if (points < 2) throw std::invalid_argument("log grid needs at least 2 points");
  std::vector<double> g;
  const double a = std::log(start), b = std::log(stop);
  for (int i = 0; i < points; ++i) g.push_back(std::exp(a + (b - a) * i / (points - 1)));
  g.front() = start;
  g.back() = stop;
  return g;
}

void check_grid(const std::vector<double>& grid) {
  if (grid.size() < 5) throw std::invalid_argument("threshold grid needs at least 5 points");
  if (!std::is_sorted(grid.begin(), grid.end()) || grid.front() <= 0.0)
    throw std::invalid_argument("threshold grid must be positive and increasing");
  if (grid.back() / grid.front() < 10.0 * (1.0 - 1e-12))
    throw std::invalid_argument("threshold grid must span at least a decade");
}

namespace {

// Log-log interpolation of the ratio to 1 between (lo, r_lo) and (hi, r_hi).
double interpolate_crossing(double lo, double r_lo, double hi, double r_hi) {
  if (!(r_lo > 0.0) || !std::isfinite(r_hi)) return std::sqrt(lo * hi);
  const double a = std::log(lo), b = std::log(hi);
  const double fa = std::log(r_lo), fb = std::log(r_hi);
  if (fb == fa) return std::sqrt(lo * hi);
  return std::exp(a + (0.0 - fa) * (b - a) / (fb - fa));
}

}  // namespace

ThresholdResult find_crossing(const std::vector<CurvePoint>& curve, const RateFunction& ratio_at) {
  ThresholdResult res;
  res.curve = curve;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const double r0 = curve[i].encoded / curve[i].bare;
    const double r1 = curve[i + 1].encoded / curve[i + 1].bare;
    if (!(r0 < 1.0 && r1 >= 1.0)) continue;
    double lo = curve[i].gamma, hi = curve[i + 1].gamma;
    double r_lo = r0, r_hi = r1;
    if (ratio_at) {
      while (hi / lo > 1.01) {
        const double mid = std::sqrt(lo * hi);
        const double r = ratio_at(mid);
        if (r < 1.0) {
          lo = mid;
          r_lo = r;
        } else {
          hi = mid;
          r_hi = r;
        }
      }
    }
    res.bracket = {lo, hi};
    res.gamma_star = interpolate_crossing(lo, r_lo, hi, r_hi);
    return res;
  }
  throw NoCrossing();
}

ThresholdResult threshold_scan(const RateFunction& encoded, const RateFunction& bare, const std::vector<double>& grid,
                               bool refine) {
  check_grid(grid);
  std::vector<CurvePoint> curve;
  for (double g : grid) curve.push_back({g, encoded(g), bare(g)});
  RateFunction ratio;
  if (refine) ratio = [&](double g) { return encoded(g) / bare(g); };
  return find_crossing(curve, ratio);
}

ThresholdResult threshold_scan(const ExperimentDescriptor& desc, const std::vector<double>& grid, bool refine,
                               std::vector<PointResult>* points) {
  check_grid(grid);
  auto results = evaluate_grid(desc, grid);
  std::vector<CurvePoint> curve;
  for (const auto& r : results) curve.push_back({r.gamma, r.encoded_rate(), r.bare_rate()});
  if (points) *points = results;
  RateFunction ratio;
  if (refine) ratio = [&](double g) { return evaluate_point(desc, g).ratio(); };
  return find_crossing(curve, ratio);
}

BathComparison compare_baths(const ExperimentDescriptor& desc, const std::vector<double>& grid) {
  ExperimentDescriptor d = desc;
  BathComparison out;
  d.bath = Bath::Distinct;
  out.distinct = evaluate_grid(d, grid);
  d.bath = Bath::Collective;
  out.collective = evaluate_grid(d, grid);
  return out;
}

}  // namespace qecdm
