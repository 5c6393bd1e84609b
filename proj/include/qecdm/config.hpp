#pragma once

// Run configuration: a `key = value` text file, '#' starts a comment.
//
//   code                  bit-flip-3 | five-qubit
//   experiment            memory | logical-x
//   protocol              A | B
//   level                 sequential | increased | maximal
//   bath                  distinct | collective
//   noise                 x | z | both     (which rates a sweep drives)
//   gamma0, gamma1        single-point rates (ignored when a sweep is given)
//   sweep_start, sweep_stop, sweep_points   log-spaced sweep
//   povm_eta              readout misreport probability in [0, 0.5]
//   n_steps, stop_at      steps per experiment, early-stop level
//   dt, split_dt          integrator steps (RK4, Split)
//   integrator            auto | exact | rk4 | split
//   refine                true | false (narrow the threshold bracket)
//   allow_gamma0_bitflip  permit Z noise on the bit-flip code
//   workers               grid points evaluated concurrently
//   output_dir            where result files go

#include <string>
#include <vector>

#include <json.hpp>

#include "qecdm/analysis.hpp"

namespace qecdm {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string code = "bit-flip-3";
  ExperimentKind experiment = ExperimentKind::Memory;
  Protocol protocol = Protocol::A;
  Parallelism level = Parallelism::Sequential;
  Bath bath = Bath::Distinct;
  NoiseAxis noise = NoiseAxis::X;
  double gamma0 = 0.0;
  double gamma1 = 0.0;
  double sweep_start = 0.0;
  double sweep_stop = 0.0;
  int sweep_points = 0;
  double povm_eta = 0.0;
  int n_steps = 10;
  double stop_at = 0.4;
  double dt = 1e-3;
  double split_dt = 2e-2;
  Integrator integrator = Integrator::Auto;
  bool refine = false;
  bool allow_gamma0_bitflip = false;
  unsigned workers = 1;
  std::string output_dir = "qecdm-out";

  bool has_sweep() const { return sweep_points > 0; }
  std::vector<double> grid() const;
  NoiseModel point_noise() const;
  ExperimentDescriptor descriptor() const;
  // Throws ConfigError on any inconsistency.
  void validate() const;
  void set(const std::string& key, const std::string& value);
  nlohmann::ordered_json to_json() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace qecdm
