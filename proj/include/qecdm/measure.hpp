#pragma once

// Single-qubit readout with optional classical misreport probability eta:
//   M_b = (1 - eta) |b><b| + eta |1-b><1-b|.
// The post-measurement state for record b is the eta-weighted mixture of the
// two projections.

#include <functional>
#include <vector>

#include "qecdm/propagator.hpp"
#include "qecdm/pulses.hpp"
#include "qecdm/qstate.hpp"

namespace qecdm {

struct PovmError {
  double eta = 0.0;
  void validate() const;
};

struct MeasurementBranch {
  int outcome = 0;
  double probability = 0.0;
  DensityMatrix post_state;
};

std::vector<MeasurementBranch> measure_projective(const DensityMatrix& rho, int qubit);
std::vector<MeasurementBranch> measure_povm(const DensityMatrix& rho, int qubit, const PovmError& err);

// 2x2 effect M_b.
Matrix povm_element(int outcome, double eta);
// Unnormalized instrument: (1-eta) P_b rho P_b + eta P_{1-b} rho P_{1-b}.
Matrix povm_instrument(const Matrix& rho, int n_qubits, int qubit, int outcome, double eta);

// Decision returned after each measurement marker.
struct ControlDecision {
  enum class Action {
    Continue,  // apply `recovery`, then carry on with the schedule
    Stop,      // apply `recovery`, then end this branch
    Reject,    // post-select the branch away
  } action = Action::Continue;
  std::vector<Gate> recovery;
};

// Receives the full classical record so far (one bit per measured qubit, in
// marker order) and returns the decision for that branch.
using Controller = std::function<ControlDecision(const std::vector<int>& record)>;

struct ControlResult {
  DensityMatrix state;           // renormalized accepted mixture
  double acceptance = 1.0;       // accepted probability
  std::size_t terminal_branches = 0;
};

struct ControlOptions {
  Parallelism level = Parallelism::Sequential;
  PovmError povm;
  double prune_tol = 1e-15;  // branches below this weight are dropped
};

// Enumerates all measurement branches of the schedule, propagating each
// branch (with noise) through its continuation and recovery pulses, and
// returns the probability-weighted sum.
ControlResult branch_and_control(const DensityMatrix& rho, const PulseSchedule& schedule, const Controller& controller,
                                 const Evolver& evolver, const ControlOptions& options = {});

}  // namespace qecdm
