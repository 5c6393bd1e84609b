#pragma once

// Crash-rate fits and threshold search.
//
// A series P_c(n) is fitted to P_c = (1 - exp(-2 G n)) / 2 through the
// linearization y = -ln(1 - 2 P_c) / 2 = G n. The threshold is where the
// encoded rate crosses the rate of one bare qubit running the same
// experiment (per unit time for memory, per step for gates).

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "qecdm/ftqec.hpp"
#include "qecdm/series.hpp"

namespace qecdm {

struct RateFit {
  double gamma_n = 0.0;   // per computational step
  double gamma_t = 0.0;   // per unit time
  double residual = 0.0;  // RMS in linearized space
};

RateFit fit_crash_rate(const CrashSeries& series);

// Exact series for a given rate, sampled at n = 1..steps.
CrashSeries synthetic_series(double gamma_n, double tau, int steps);

enum class ExperimentKind { Memory, LogicalX };
const char* to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);

// Which noise rates a sweep variable drives: X -> gamma1, Z -> gamma0,
// Both -> gamma0 = gamma1.
enum class NoiseAxis { X, Z, Both };
const char* to_string(NoiseAxis axis);
NoiseAxis noise_axis_from_string(const std::string& name);
NoiseModel noise_for(NoiseAxis axis, double gamma, Bath bath);

struct ExperimentDescriptor {
  std::string code = "bit-flip-3";
  ExperimentKind kind = ExperimentKind::Memory;
  Protocol protocol = Protocol::A;
  Parallelism level = Parallelism::Sequential;
  Bath bath = Bath::Distinct;
  NoiseAxis axis = NoiseAxis::X;
  double povm_eta = 0.0;
  ExperimentOptions options;
  IntegratorConfig integrator;
  unsigned workers = 1;

  QecSettings settings(double gamma) const;
};

CrashSeries run_experiment(const ExperimentDescriptor& desc, double gamma);
// One unencoded qubit with the code's logical input: memory samples every
// unit of time, the gate experiment applies one X pulse per step.
CrashSeries bare_series(const ExperimentDescriptor& desc, double gamma);

struct PointResult {
  double gamma = 0.0;
  CrashSeries series;
  RateFit fit;
  RateFit bare_fit;
  bool ok = true;      // false when the point is beyond threshold
  std::string note;    // reason when !ok
  double encoded_rate() const;  // compared quantity, +inf when !ok
  double bare_rate() const;
  double ratio() const;
  ExperimentKind kind = ExperimentKind::Memory;
};

PointResult evaluate_point(const ExperimentDescriptor& desc, double gamma);
// Order-stable: result i belongs to grid[i] whatever the worker count.
std::vector<PointResult> evaluate_grid(const ExperimentDescriptor& desc, const std::vector<double>& grid);

std::vector<double> log_grid(double start, double stop, int points);

struct CurvePoint {
  double gamma = 0.0;
  double encoded = 0.0;
  double bare = 0.0;
};

struct ThresholdResult {
  double gamma_star = 0.0;
  std::pair<double, double> bracket{0.0, 0.0};
  std::vector<CurvePoint> curve;
};

class NoCrossing : public std::runtime_error {
 public:
  NoCrossing() : std::runtime_error("no crossing bracketed") {}
};

using RateFunction = std::function<double(double gamma)>;

// Crossing of encoded(g) and bare(g) from tabulated values, by log-log
// interpolation of the ratio inside the first bracketing interval. With
// `refine`, the bracket is narrowed with fresh evaluations of `ratio_at`
// until hi/lo <= 1.01.
ThresholdResult find_crossing(const std::vector<CurvePoint>& curve, const RateFunction& ratio_at = nullptr);

ThresholdResult threshold_scan(const RateFunction& encoded, const RateFunction& bare, const std::vector<double>& grid,
                               bool refine);
// Full pipeline; `points` (optional) receives the per-grid-point results.
ThresholdResult threshold_scan(const ExperimentDescriptor& desc, const std::vector<double>& grid, bool refine,
                               std::vector<PointResult>* points = nullptr);

struct BathComparison {
  std::vector<PointResult> distinct;
  std::vector<PointResult> collective;
};
BathComparison compare_baths(const ExperimentDescriptor& desc, const std::vector<double>& grid);

void check_grid(const std::vector<double>& grid);

}  // namespace qecdm
