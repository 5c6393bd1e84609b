#pragma once

// Stabilizer codes encoding one logical qubit.
//
// A syndrome is stored as an integer with generator i at bit (m - 1 - i), so
// for the bit-flip code (M1, M2) = (1, 0) is the integer 2.

#include <string>
#include <vector>

#include "qecdm/pulses.hpp"
#include "qecdm/qstate.hpp"

namespace qecdm {

// Tensor product of single-qubit Paulis, written left to right ("XZZXI").
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::string ops);
  static PauliString identity(int n);
  static PauliString single(int n, int qubit, char p);

  const std::string& str() const { return ops_; }
  int size() const { return static_cast<int>(ops_.size()); }
  char at(int q) const { return ops_[static_cast<std::size_t>(q)]; }
  int weight() const;
  bool commutes_with(const PauliString& other) const;
  // Product up to a global phase.
  PauliString operator*(const PauliString& other) const;
  Matrix matrix() const;
  bool operator==(const PauliString&) const = default;

 private:
  std::string ops_;
};

struct StabilizerCode {
  std::string name;
  int n = 0;
  std::vector<PauliString> generators;
  std::vector<PauliString> recovery;  // indexed by syndrome integer
  PauliString logical_x;
  PauliString logical_z;
  Vector codeword0;
  Vector codeword1;

  int syndrome_bits() const { return static_cast<int>(generators.size()); }
  unsigned syndrome_of(const PauliString& error) const;
  // Gates realizing the table recovery for a syndrome (empty for identity).
  std::vector<Gate> recovery_gates(unsigned syndrome) const;
};

StabilizerCode bit_flip_code();
StabilizerCode five_qubit_code();
// "bit-flip-3" or "five-qubit".
StabilizerCode code_by_name(const std::string& name);

// Noiseless a|0_L> + b|1_L> embedding of a one-qubit state.
DensityMatrix encode_ideal(const StabilizerCode& code, const DensityMatrix& logical);

// Projects onto each syndrome space, applies the table recovery, and returns
// 1 - F against the ideally encoded logical state. `rho` must have unit trace.
double perfect_decode_crash(const StabilizerCode& code, const Matrix& rho, const DensityMatrix& ideal_logical);
double perfect_decode_crash(const StabilizerCode& code, const DensityMatrix& rho, const DensityMatrix& ideal_logical);

}  // namespace qecdm
