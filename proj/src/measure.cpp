#include "qecdm/measure.hpp"

#include <cmath>
#include <stdexcept>

#include "qecdm/kernels.hpp"

namespace qecdm {

void PovmError::validate() const {
  if (!(eta >= 0.0 && eta <= 0.5)) throw std::invalid_argument("measurement error eta must lie in [0, 0.5]");
}

Matrix povm_element(int outcome, double eta) {
  Matrix m = Matrix::Zero(2, 2);
  m(outcome, outcome) = 1.0 - eta;
  m(1 - outcome, 1 - outcome) = eta;
  return m;
}

Matrix povm_instrument(const Matrix& rho, int n_qubits, int qubit, int outcome, double eta) {
  if (qubit < 0 || qubit >= n_qubits) throw std::invalid_argument("measured qubit out of range");
  Matrix right = rho;
  project_qubit(right, n_qubits, qubit, outcome);
  if (eta == 0.0) return right;
  Matrix wrong = rho;
  project_qubit(wrong, n_qubits, qubit, 1 - outcome);
  return (1.0 - eta) * right + eta * wrong;
}

std::vector<MeasurementBranch> measure_povm(const DensityMatrix& rho, int qubit, const PovmError& err) {
  err.validate();
  std::vector<MeasurementBranch> out;
  for (int b = 0; b < 2; ++b) {
    Matrix post = povm_instrument(rho.matrix(), rho.n_qubits(), qubit, b, err.eta);
    const double p = post.trace().real();
    if (p <= 1e-15) continue;
    out.push_back(MeasurementBranch{b, p, DensityMatrix::normalized(std::move(post))});
  }
  return out;
}

std::vector<MeasurementBranch> measure_projective(const DensityMatrix& rho, int qubit) {
  return measure_povm(rho, qubit, PovmError{0.0});
}

namespace {

struct Walker {
  const PulseSchedule& schedule;
  const Controller& controller;
  const Evolver& evolver;
  const ControlOptions& options;
  double input_weight;
  Matrix sum;
  std::size_t terminals = 0;

  void walk(Matrix rho, std::size_t pos, std::vector<int> record) {
    const int n = schedule.n_qubits;
    PulseSchedule segment;
    segment.n_qubits = n;
    std::size_t i = pos;
    for (; i < schedule.items.size(); ++i) {
      if (std::holds_alternative<MeasurementMarker>(schedule.items[i])) break;
      segment.items.push_back(schedule.items[i]);
    }
    if (!segment.items.empty()) evolver.run(rho, segment);
    if (i == schedule.items.size()) {
      sum += rho;
      ++terminals;
      return;
    }
    const auto& marker = std::get<MeasurementMarker>(schedule.items[i]);
    const std::size_t k = marker.qubits.size();
    for (std::size_t pattern = 0; pattern < (std::size_t{1} << k); ++pattern) {
      Matrix r = rho;
      std::vector<int> rec = record;
      for (std::size_t j = 0; j < k; ++j) {
        const int bit = static_cast<int>((pattern >> (k - 1 - j)) & 1u);
        r = povm_instrument(r, n, marker.qubits[j], bit, options.povm.eta);
        rec.push_back(bit);
      }
      if (r.trace().real() <= options.prune_tol * input_weight) continue;
      if (marker.reset_after)
        for (int q : marker.qubits) reset_qubit(r, n, q);
      const ControlDecision decision = controller(rec);
      if (decision.action == ControlDecision::Action::Reject) continue;
      if (!decision.recovery.empty()) {
        Circuit c;
        c.n_qubits = n;
        c.then_parallel(decision.recovery);
        evolver.run(r, schedule_circuit(c, options.level));
      }
      if (decision.action == ControlDecision::Action::Stop) {
        sum += r;
        ++terminals;
        continue;
      }
      walk(std::move(r), i + 1, std::move(rec));
    }
  }
};

}  // namespace

ControlResult branch_and_control(const DensityMatrix& rho, const PulseSchedule& schedule, const Controller& controller,
                                 const Evolver& evolver, const ControlOptions& options) {
  if (rho.n_qubits() != schedule.n_qubits) throw std::invalid_argument("state and schedule register sizes differ");
  options.povm.validate();
  schedule.validate();
  const auto d = static_cast<Eigen::Index>(rho.dim());
  Walker w{schedule, controller, evolver, options, rho.trace(), Matrix::Zero(d, d), 0};
  w.walk(rho.matrix(), 0, {});
  const double accepted = w.sum.trace().real();
  if (!(accepted > 0.0)) throw std::runtime_error("every branch was rejected");
  return ControlResult{DensityMatrix::normalized(w.sum), accepted / rho.trace(), w.terminals};
}

}  // namespace qecdm
