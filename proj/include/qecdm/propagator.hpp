#pragma once

// Averaged master equation for white-noise fluctuations of the control
// fields: d rho/dt = -i[H, rho] + D(rho), with
//   distinct bath:   D = -sum_i (g0/2)[Z_i,[Z_i,.]] + (g1/2)[X_i,[X_i,.]]
//   collective bath: D = -(g0/2)[S_Z,[S_Z,.]] - (g1/2)[S_X,[S_X,.]].

#include <atomic>
#include <map>
#include <mutex>
#include <string>

#include "qecdm/pulses.hpp"
#include "qecdm/qstate.hpp"

namespace qecdm {

enum class Bath { Distinct, Collective };

const char* to_string(Bath bath);
Bath bath_from_string(const std::string& name);

struct NoiseModel {
  double gamma0 = 0.0;  // couples to Z
  double gamma1 = 0.0;  // couples to X
  Bath bath = Bath::Distinct;

  void validate() const;
  bool noiseless() const { return gamma0 == 0.0 && gamma1 == 0.0; }
};

enum class Integrator {
  Auto,   // Exact for a distinct bath, Split for a collective one
  Exact,  // per-layer superoperator exponentials (distinct bath only)
  RK4,    // fixed-step classical Runge-Kutta on the full register
  Split,  // Strang splitting of control and dissipator, exact sub-steps
};

const char* to_string(Integrator method);
Integrator integrator_from_string(const std::string& name);

struct IntegratorConfig {
  double dt = 1e-3;        // RK4 step
  double split_dt = 2e-2;  // Split step
  double trace_tol = 1e-9;
  double herm_tol = 1e-12;
  Integrator method = Integrator::Auto;
  bool check_positivity = false;
  double positivity_tol = 1e-8;

  void validate() const;
};

// D(rho) as defined above; trace zero.
Matrix dissipator(const Matrix& rho, int n_qubits, const NoiseModel& noise);

// Single-qubit Pauli channel produced by idling for time t.
struct IdleChannel {
  double px = 0.0, py = 0.0, pz = 0.0;
};
IdleChannel idle_channel(const NoiseModel& noise, double t);

// Stateless apart from a superoperator cache; safe to share between threads.
class Evolver {
 public:
  Evolver(NoiseModel noise, IntegratorConfig cfg);

  const NoiseModel& noise() const { return noise_; }
  const IntegratorConfig& config() const { return cfg_; }
  Integrator method() const { return method_; }

  // rho <- E(rho) for the channel E of the schedule. Measurement markers
  // are rejected. rho need not be normalized.
  void run(Matrix& rho, const PulseSchedule& schedule) const;
  // op <- E^dagger(op), the Heisenberg-picture map of the same schedule.
  void run_adjoint(Matrix& op, const PulseSchedule& schedule) const;
  // Noise only, no control, for time t on a register of n qubits.
  void idle(Matrix& rho, int n_qubits, double t) const;

  long long layers_processed() const { return layers_.load(); }
  long long superop_applications() const { return applications_.load(); }

 private:
  const Matrix& component_superop(const PulseLayer& layer, const std::vector<int>& support, bool adjoint) const;
  const Matrix& component_unitary(const PulseLayer& layer, const std::vector<int>& support, double t) const;
  void run_exact(Matrix& rho, const PulseSchedule& schedule, bool adjoint) const;
  void run_rk4(Matrix& rho, const PulseSchedule& schedule) const;
  void run_split(Matrix& rho, const PulseSchedule& schedule, bool adjoint) const;
  void apply_dissipator_exact(Matrix& rho, int n_qubits, double t, bool z_part, bool x_part) const;

  NoiseModel noise_;
  IntegratorConfig cfg_;
  Integrator method_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, Matrix> cache_;
  mutable std::atomic<long long> layers_{0};
  mutable std::atomic<long long> applications_{0};
};

// Validating wrapper: propagates a normalized state and checks the
// DensityMatrix invariants (trace drift, hermiticity, optional positivity).
DensityMatrix propagate(const DensityMatrix& rho, const PulseSchedule& schedule, const NoiseModel& noise,
                        const IntegratorConfig& cfg = {});

// Checks and symmetrizes a propagated matrix; throws std::runtime_error when
// the trace drifted beyond cfg.trace_tol or positivity fails.
DensityMatrix finalize_state(Matrix m, const IntegratorConfig& cfg);

// One unencoded qubit running the same experiment as the encoded code.
struct BareExperiment {
  enum class Kind { Memory, XGate } kind = Kind::Memory;
  double duration = 0.0;  // Memory: idle time
  int gates = 1;          // XGate: number of consecutive X pulses
};

double bare_qubit_crash(const BareExperiment& experiment, const NoiseModel& noise,
                        const DensityMatrix& initial = DensityMatrix::basis_state(1, 0),
                        const IntegratorConfig& cfg = {});

}  // namespace qecdm
