#include "qecdm/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace qecdm {

int qubits_for_dimension(std::size_t dim) {
  if (dim < 2 || (dim & (dim - 1)) != 0) {
    throw std::invalid_argument("dimension " + std::to_string(dim) + " is not a power of two");
  }
  int n = 0;
  while ((std::size_t{1} << n) < dim) ++n;
  if (n > kMaxQubits) {
    throw std::invalid_argument("register of " + std::to_string(n) + " qubits exceeds the supported maximum");
  }
  return n;
}

namespace pauli {

Matrix I() { return Matrix::Identity(2, 2); }

Matrix X() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

Matrix Y() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = Complex(0.0, -1.0);
  m(1, 0) = Complex(0.0, 1.0);
  return m;
}

Matrix Z() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

Matrix from_char(char p) {
  switch (p) {
    case 'I': return I();
    case 'X': return X();
    case 'Y': return Y();
    case 'Z': return Z();
    default: throw std::invalid_argument(std::string("unknown Pauli '") + p + "'");
  }
}

}  // namespace pauli

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

QubitOperator::QubitOperator(int n_qubits, Matrix data) : n_qubits_(n_qubits), data_(std::move(data)) {
  if (data_.rows() != data_.cols() || qubits_for_dimension(static_cast<std::size_t>(data_.rows())) != n_qubits) {
    throw std::invalid_argument("operator shape does not match register size");
  }
}

QubitOperator QubitOperator::identity(int n_qubits) {
  const auto d = static_cast<Eigen::Index>(dim_of(n_qubits));
  return QubitOperator(n_qubits, Matrix::Identity(d, d));
}

QubitOperator QubitOperator::operator*(const QubitOperator& rhs) const {
  if (rhs.n_qubits_ != n_qubits_) throw std::invalid_argument("operator size mismatch");
  return QubitOperator(n_qubits_, data_ * rhs.data_);
}

QubitOperator QubitOperator::adjoint() const { return QubitOperator(n_qubits_, data_.adjoint()); }

bool QubitOperator::is_unitary(double tol) const {
  const Matrix prod = data_ * data_.adjoint();
  return (prod - Matrix::Identity(prod.rows(), prod.cols())).cwiseAbs().maxCoeff() <= tol;
}

QubitOperator embed(const Matrix& op, std::span<const int> targets, int n_qubits) {
  const int k = static_cast<int>(targets.size());
  if (k == 0 || op.rows() != op.cols() || op.rows() != static_cast<Eigen::Index>(dim_of(k))) {
    throw std::invalid_argument("embed: operator size does not match target count");
  }
  for (int i = 0; i < k; ++i) {
    if (targets[i] < 0 || targets[i] >= n_qubits) throw std::invalid_argument("embed: target out of range");
    for (int j = 0; j < i; ++j) {
      if (targets[i] == targets[j]) throw std::invalid_argument("embed: repeated target");
    }
  }
  const std::size_t d = dim_of(n_qubits);
  std::size_t target_mask = 0;
  for (int t : targets) target_mask |= qubit_mask(n_qubits, t);

  auto local_index = [&](std::size_t full) {
    std::size_t l = 0;
    for (int j = 0; j < k; ++j) {
      l = (l << 1) | ((full & qubit_mask(n_qubits, targets[j])) ? 1u : 0u);
    }
    return l;
  };

  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t c = 0; c < d; ++c) {
    const std::size_t lc = local_index(c);
    const std::size_t rest = c & ~target_mask;
    for (std::size_t lr = 0; lr < dim_of(k); ++lr) {
      const Complex v = op(static_cast<Eigen::Index>(lr), static_cast<Eigen::Index>(lc));
      if (v == Complex(0.0)) continue;
      std::size_t r = rest;
      for (int j = 0; j < k; ++j) {
        if (lr & (std::size_t{1} << (k - 1 - j))) r |= qubit_mask(n_qubits, targets[j]);
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return QubitOperator(n_qubits, std::move(out));
}

double hermiticity_error(const Matrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

double min_eigenvalue(const Matrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

DensityMatrix DensityMatrix::from_pure(const Vector& amplitudes) {
  const int n = qubits_for_dimension(static_cast<std::size_t>(amplitudes.size()));
  if (std::abs(amplitudes.squaredNorm() - 1.0) > 1e-12) {
    throw std::invalid_argument("amplitude vector is not normalized");
  }
  return DensityMatrix(n, amplitudes * amplitudes.adjoint());
}

DensityMatrix DensityMatrix::from_matrix(Matrix data) {
  if (data.rows() != data.cols()) throw std::invalid_argument("density matrix must be square");
  const int n = qubits_for_dimension(static_cast<std::size_t>(data.rows()));
  if (hermiticity_error(data) > 1e-12) throw std::invalid_argument("density matrix is not Hermitian");
  if (std::abs(data.trace().real() - 1.0) > 1e-9) throw std::invalid_argument("density matrix trace is not 1");
  if (min_eigenvalue(data) < -1e-8) throw std::invalid_argument("density matrix is not positive semidefinite");
  return DensityMatrix(n, std::move(data));
}

DensityMatrix DensityMatrix::normalized(Matrix data) {
  if (data.rows() != data.cols()) throw std::invalid_argument("density matrix must be square");
  const int n = qubits_for_dimension(static_cast<std::size_t>(data.rows()));
  const double tr = data.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) throw std::invalid_argument("cannot normalize a state with zero trace");
  Matrix m = (0.5 / tr) * (data + data.adjoint());
  return DensityMatrix(n, std::move(m));
}

DensityMatrix DensityMatrix::basis_state(int n_qubits, std::size_t index) {
  const std::size_t d = dim_of(n_qubits);
  if (index >= d) throw std::invalid_argument("basis index out of range");
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  m(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
  return DensityMatrix(n_qubits, std::move(m));
}

DensityMatrix DensityMatrix::maximally_mixed(int n_qubits) {
  const auto d = static_cast<Eigen::Index>(dim_of(n_qubits));
  return DensityMatrix(n_qubits, Matrix::Identity(d, d) / static_cast<double>(d));
}

double DensityMatrix::trace() const { return data_.trace().real(); }

double DensityMatrix::purity() const { return (data_ * data_).trace().real(); }

DensityMatrix DensityMatrix::tensor(const DensityMatrix& rhs) const {
  return DensityMatrix(n_qubits_ + rhs.n_qubits_, kron(data_, rhs.data_));
}

DensityMatrix DensityMatrix::conjugated(const QubitOperator& u) const {
  if (u.n_qubits() != n_qubits_) throw std::invalid_argument("operator size mismatch");
  Matrix m = u.matrix() * data_ * u.matrix().adjoint();
  m = 0.5 * (m + m.adjoint()).eval();
  return DensityMatrix(n_qubits_, std::move(m));
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& pure_target) {
  if (rho.n_qubits() != pure_target.n_qubits()) throw std::invalid_argument("fidelity: dimension mismatch");
  if (std::abs(pure_target.purity() - 1.0) > 1e-9) throw std::invalid_argument("fidelity: target is not pure");
  // Tr(A B) for Hermitian A, B is the elementwise sum of A .* conj(B).
  const double f = (rho.matrix().cwiseProduct(pure_target.matrix().conjugate())).sum().real();
  return std::clamp(f, 0.0, 1.0);
}

Matrix partial_trace(const Matrix& op, int n_qubits, std::span<const int> keep) {
  const int k = static_cast<int>(keep.size());
  if (k == 0) throw std::invalid_argument("partial_trace: empty keep set");
  std::size_t keep_mask = 0;
  for (int q : keep) {
    if (q < 0 || q >= n_qubits) throw std::invalid_argument("partial_trace: qubit out of range");
    const std::size_t m = qubit_mask(n_qubits, q);
    if (keep_mask & m) throw std::invalid_argument("partial_trace: repeated qubit");
    keep_mask |= m;
  }
  const std::size_t d = dim_of(n_qubits);
  const std::size_t dk = dim_of(k);

  std::vector<std::size_t> kept_offset(dk, 0);
  for (std::size_t l = 0; l < dk; ++l) {
    for (int j = 0; j < k; ++j) {
      if (l & (std::size_t{1} << (k - 1 - j))) kept_offset[l] |= qubit_mask(n_qubits, keep[j]);
    }
  }
  std::vector<std::size_t> traced;
  traced.reserve(d / dk);
  for (std::size_t i = 0; i < d; ++i) {
    if ((i & keep_mask) == 0) traced.push_back(i);
  }

  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  for (std::size_t c = 0; c < dk; ++c) {
    for (std::size_t r = 0; r < dk; ++r) {
      Complex acc = 0.0;
      for (std::size_t t : traced) {
        acc += op(static_cast<Eigen::Index>(t | kept_offset[r]), static_cast<Eigen::Index>(t | kept_offset[c]));
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = acc;
    }
  }
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep) {
  Matrix reduced = partial_trace(rho.matrix(), rho.n_qubits(), keep);
  return DensityMatrix::from_matrix(0.5 * (reduced + reduced.adjoint()));
}

DensityMatrix average_logical_input() {
  const double s = 1.0 / std::sqrt(3.0);
  Matrix m = 0.5 * (pauli::I() + s * (pauli::X() + pauli::Y() + pauli::Z()));
  return DensityMatrix::from_matrix(std::move(m));
}

}  // namespace qecdm
