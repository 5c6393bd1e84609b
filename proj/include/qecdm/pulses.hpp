#pragma once

// Step-function control pulses and gate compilation.
//
// A pulse term of strength s held for time t generates exp(-i s t P) with
// P in {Z_i, X_i, Z_i Z_j}; time is in units of 1/epsilon.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "qecdm/qstate.hpp"

namespace qecdm {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kQuarterPi = kPi / 4.0;

enum class PulseKind { Z, X, ZZ };

struct PulseTerm {
  PulseKind kind = PulseKind::Z;
  int q0 = 0;
  int q1 = -1;  // only for ZZ
  int strength = 1;

  bool operator==(const PulseTerm&) const = default;
};

struct PulseLayer {
  std::vector<PulseTerm> terms;
  double duration = 0.0;
};

// Instantaneous readout of `qubits`. With reset_after the measured qubits
// are returned to |0> once the outcome is recorded.
struct MeasurementMarker {
  std::vector<int> qubits;
  bool reset_after = false;
};

// Instantaneous Pauli applied to one qubit (fault injection).
struct PauliKick {
  int qubit = 0;
  char pauli = 'X';
};

using ScheduleItem = std::variant<PulseLayer, MeasurementMarker, PauliKick>;

struct PulseSchedule {
  int n_qubits = 0;
  std::vector<ScheduleItem> items;

  double total_duration() const;
  std::size_t layer_count() const;
  void append(const PulseSchedule& other);
  void validate() const;
};

enum class GateKind { Hadamard, PauliX, PauliY, PauliZ, Phase, CZ, CNOT };

struct Gate {
  GateKind kind = GateKind::Hadamard;
  int q0 = 0;
  int q1 = -1;  // target for CNOT, second qubit for CZ

  std::vector<int> qubits() const;
};

enum class Parallelism { Sequential, Increased, Maximal };

const char* to_string(Parallelism level);
Parallelism parallelism_from_string(const std::string& name);

// Ordered groups of gates; gates within a group are declared simultaneous.
struct Circuit {
  int n_qubits = 0;
  std::vector<std::vector<Gate>> groups;

  Circuit& then(Gate g);
  Circuit& then_parallel(std::vector<Gate> gs);
};

// Ideal unitary of a gate on a 1- or 2-qubit local space (control first).
Matrix ideal_gate_matrix(GateKind kind);
QubitOperator ideal_circuit_unitary(const Circuit& circuit);

PulseSchedule compile_gate(const Gate& gate, Parallelism level, int n_qubits);
PulseSchedule schedule_circuit(const Circuit& circuit, Parallelism level);

// Hamiltonian of a layer restricted to `support` (qubits in the order given).
Matrix layer_hamiltonian(const PulseLayer& layer, std::span<const int> support);
QubitOperator layer_unitary(const PulseLayer& layer, int n_qubits);
// Product of every layer and kick unitary; measurement markers are rejected.
QubitOperator schedule_unitary(const PulseSchedule& schedule);

// Inserts a kick before item `boundary` (boundary == items.size() appends).
PulseSchedule with_kick(const PulseSchedule& schedule, std::size_t boundary, int qubit, char pauli);

// Pauli operator as x/z bit masks over qubits, bit q <-> qubit q; phase ignored.
struct PauliMask {
  std::uint32_t x = 0;
  std::uint32_t z = 0;
  bool operator==(const PauliMask&) const = default;
  bool operator<(const PauliMask& o) const { return x != o.x ? x < o.x : z < o.z; }
  bool is_identity() const { return x == 0 && z == 0; }
};

PauliMask single_pauli(int qubit, char pauli);
char pauli_at(const PauliMask& p, int qubit);

// Conjugates a Pauli through items [from, end) of a schedule whose layers are
// Clifford (every term angle a multiple of pi/4). Throws on markers or
// non-Clifford layers.
PauliMask propagate_pauli(const PulseSchedule& schedule, std::size_t from, PauliMask p);

// JSON debug dump: {"n_qubits", "total_duration", "items": [...]}.
std::string schedule_to_json(const PulseSchedule& schedule);

}  // namespace qecdm
