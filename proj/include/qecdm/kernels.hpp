#pragma once

// In-place local maps on a dense 2^n x 2^n operator.
//
// Superoperators on k qubits are 4^k x 4^k matrices acting on the row-major
// vectorization of the local block: entry (l, m) of a 2^k x 2^k block sits at
// index l * 2^k + m. With this layout X -> A X B is kron(A, B^T).

#include <span>

#include "qecdm/qstate.hpp"

namespace qecdm {

// rho <- U rho U^dagger.
void apply_unitary(Matrix& rho, const Matrix& u, std::span<const int> targets, int n_qubits);

// rho <- S(rho) for a superoperator S on `targets`.
void apply_superop(Matrix& rho, const Matrix& s, std::span<const int> targets, int n_qubits);

// rho <- P rho P for P in {X, Y, Z}.
void apply_pauli(Matrix& rho, int n_qubits, int qubit, char pauli);

// rho <- (1 - px - py - pz) rho + px X rho X + py Y rho Y + pz Z rho Z.
void apply_pauli_channel(Matrix& rho, int n_qubits, int qubit, double px, double py, double pz);

// rho <- Pi rho Pi for the projector onto `bit` of `qubit`.
void project_qubit(Matrix& rho, int n_qubits, int qubit, int bit);

// rho <- |0><0|_q (x) Tr_q(rho), keeping the qubit in place.
void reset_qubit(Matrix& rho, int n_qubits, int qubit);

// In-place Walsh-Hadamard transform of all rows and columns (unnormalized
// butterflies, scaled by 1/d at the end so the map is an involution).
void walsh_hadamard_both(Matrix& rho);

// Superoperator helpers in the layout above.
Matrix superop_sandwich(const Matrix& a, const Matrix& b);
Matrix superop_hamiltonian(const Matrix& h);
// -(gamma/2)[A,[A,.]] for Hermitian A.
Matrix superop_double_commutator(const Matrix& a, double gamma);
// Superoperator of k independent single-qubit Pauli channels with the
// given probabilities (px, py, pz) per qubit.
Matrix superop_pauli_channel(int k, std::span<const double> px, std::span<const double> py,
                             std::span<const double> pz);

}  // namespace qecdm
