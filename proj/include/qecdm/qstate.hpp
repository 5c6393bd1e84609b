#pragma once

// Dense linear algebra for n-qubit registers.
//
// Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
// basis-state index. Every module relies on this ordering.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qecdm {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr int kMaxQubits = 12;

inline std::size_t dim_of(int n_qubits) { return std::size_t{1} << n_qubits; }

// Bit of the basis index that carries qubit q in an n-qubit register.
inline std::size_t qubit_mask(int n_qubits, int q) {
  return std::size_t{1} << (n_qubits - 1 - q);
}

// Throws std::invalid_argument unless dim is 2^n with 1 <= n <= kMaxQubits.
int qubits_for_dimension(std::size_t dim);

namespace pauli {
Matrix I();
Matrix X();
Matrix Y();
Matrix Z();
// 'I', 'X', 'Y' or 'Z'.
Matrix from_char(char p);
}  // namespace pauli

Matrix kron(const Matrix& a, const Matrix& b);

// A 2^n x 2^n operator on a qubit register.
class QubitOperator {
 public:
  QubitOperator(int n_qubits, Matrix data);

  static QubitOperator identity(int n_qubits);

  int n_qubits() const { return n_qubits_; }
  const Matrix& matrix() const { return data_; }

  QubitOperator operator*(const QubitOperator& rhs) const;
  QubitOperator adjoint() const;
  bool is_unitary(double tol = 1e-10) const;

 private:
  int n_qubits_;
  Matrix data_;
};

// Kronecker embedding of a 1- or 2-qubit operator acting on `targets`
// (targets[0] is the operator's leftmost factor) with identity elsewhere.
QubitOperator embed(const Matrix& op, std::span<const int> targets, int n_qubits);

// Hermitian, unit-trace, positive semidefinite state of an n-qubit register.
class DensityMatrix {
 public:
  // |psi><psi|; amplitudes must have unit norm within 1e-12.
  static DensityMatrix from_pure(const Vector& amplitudes);
  // Validates hermiticity (1e-12), unit trace (1e-9) and positivity (-1e-8).
  static DensityMatrix from_matrix(Matrix data);
  // Symmetrizes and divides by the trace; skips the eigenvalue check. For
  // states produced by completely positive maps.
  static DensityMatrix normalized(Matrix data);
  static DensityMatrix basis_state(int n_qubits, std::size_t index);
  static DensityMatrix maximally_mixed(int n_qubits);

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return dim_of(n_qubits_); }
  const Matrix& matrix() const { return data_; }

  double trace() const;
  double purity() const;
  DensityMatrix tensor(const DensityMatrix& rhs) const;
  // U rho U^dagger.
  DensityMatrix conjugated(const QubitOperator& u) const;

 private:
  DensityMatrix(int n_qubits, Matrix data) : n_qubits_(n_qubits), data_(std::move(data)) {}

  int n_qubits_;
  Matrix data_;
};

// Tr(rho |psi><psi|) for a rank-one target.
double fidelity(const DensityMatrix& rho, const DensityMatrix& pure_target);

// Reduced state over `keep`; kept qubits appear in the order given.
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep);
Matrix partial_trace(const Matrix& op, int n_qubits, std::span<const int> keep);

// (I + (X + Y + Z)/sqrt(3)) / 2: a pure state with Bloch vector (1,1,1)/sqrt(3).
DensityMatrix average_logical_input();

double hermiticity_error(const Matrix& m);
double min_eigenvalue(const Matrix& hermitian);

}  // namespace qecdm
