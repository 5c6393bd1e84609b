#include "qecdm/kernels.hpp"

#include <stdexcept>
#include <vector>

namespace qecdm {
namespace {

using Index = Eigen::Index;

struct LocalLayout {
  std::vector<Index> offsets;  // 2^k offsets, offsets[l] sets target bits of l
  std::vector<Index> bases;    // d / 2^k indices with all target bits clear
};

LocalLayout make_layout(std::span<const int> targets, int n_qubits) {
  const int k = static_cast<int>(targets.size());
  if (k == 0 || k > n_qubits) throw std::invalid_argument("local map: bad target count");
  std::size_t target_mask = 0;
  for (int t : targets) {
    if (t < 0 || t >= n_qubits) throw std::invalid_argument("local map: target out of range");
    const std::size_t m = qubit_mask(n_qubits, t);
    if (target_mask & m) throw std::invalid_argument("local map: repeated target");
    target_mask |= m;
  }
  LocalLayout layout;
  const std::size_t kd = dim_of(k);
  layout.offsets.resize(kd);
  for (std::size_t l = 0; l < kd; ++l) {
    std::size_t off = 0;
    for (int j = 0; j < k; ++j) {
      if (l & (std::size_t{1} << (k - 1 - j))) off |= qubit_mask(n_qubits, targets[j]);
    }
    layout.offsets[l] = static_cast<Index>(off);
  }
  const std::size_t d = dim_of(n_qubits);
  layout.bases.reserve(d / kd);
  for (std::size_t i = 0; i < d; ++i) {
    if ((i & target_mask) == 0) layout.bases.push_back(static_cast<Index>(i));
  }
  return layout;
}

void check_square(const Matrix& rho, int n_qubits) {
  const auto d = static_cast<Index>(dim_of(n_qubits));
  if (rho.rows() != d || rho.cols() != d) throw std::invalid_argument("local map: register size mismatch");
}

}  // namespace

void apply_unitary(Matrix& rho, const Matrix& u, std::span<const int> targets, int n_qubits) {
  check_square(rho, n_qubits);
  const LocalLayout lay = make_layout(targets, n_qubits);
  const Index k = static_cast<Index>(lay.offsets.size());
  if (u.rows() != k || u.cols() != k) throw std::invalid_argument("apply_unitary: operator size mismatch");
  const Index d = rho.rows();
  std::vector<Index> idx(static_cast<std::size_t>(k));
  Matrix block(k, d);
  for (Index b : lay.bases) {
    for (Index l = 0; l < k; ++l) idx[l] = b + lay.offsets[l];
    block.noalias() = u * rho(idx, Eigen::all);
    rho(idx, Eigen::all) = block;
  }
  const Matrix ud = u.adjoint();
  Matrix cblock(d, k);
  for (Index b : lay.bases) {
    for (Index l = 0; l < k; ++l) idx[l] = b + lay.offsets[l];
    cblock.noalias() = rho(Eigen::all, idx) * ud;
    rho(Eigen::all, idx) = cblock;
  }
}

void apply_superop(Matrix& rho, const Matrix& s, std::span<const int> targets, int n_qubits) {
  check_square(rho, n_qubits);
  const LocalLayout lay = make_layout(targets, n_qubits);
  const Index k = static_cast<Index>(lay.offsets.size());
  if (s.rows() != k * k || s.cols() != k * k) throw std::invalid_argument("apply_superop: operator size mismatch");
  const Index nb = static_cast<Index>(lay.bases.size());
  Matrix x(k * k, nb);
  Matrix y(k * k, nb);
  for (Index br : lay.bases) {
    for (Index j = 0; j < nb; ++j) {
      const Index bc = lay.bases[static_cast<std::size_t>(j)];
      for (Index l = 0; l < k; ++l) {
        for (Index m = 0; m < k; ++m) x(l * k + m, j) = rho(br + lay.offsets[l], bc + lay.offsets[m]);
      }
    }
    y.noalias() = s * x;
    for (Index j = 0; j < nb; ++j) {
      const Index bc = lay.bases[static_cast<std::size_t>(j)];
      for (Index l = 0; l < k; ++l) {
        for (Index m = 0; m < k; ++m) rho(br + lay.offsets[l], bc + lay.offsets[m]) = y(l * k + m, j);
      }
    }
  }
}

void apply_pauli(Matrix& rho, int n_qubits, int qubit, char pauli) {
  switch (pauli) {
    case 'I': return;
    case 'X': apply_pauli_channel(rho, n_qubits, qubit, 1.0, 0.0, 0.0); return;
    case 'Y': apply_pauli_channel(rho, n_qubits, qubit, 0.0, 1.0, 0.0); return;
    case 'Z': apply_pauli_channel(rho, n_qubits, qubit, 0.0, 0.0, 1.0); return;
    default: throw std::invalid_argument(std::string("apply_pauli: unknown Pauli '") + pauli + "'");
  }
}

void apply_pauli_channel(Matrix& rho, int n_qubits, int qubit, double px, double py, double pz) {
  check_square(rho, n_qubits);
  if (qubit < 0 || qubit >= n_qubits) throw std::invalid_argument("pauli channel: qubit out of range");
  const Index m = static_cast<Index>(qubit_mask(n_qubits, qubit));
  const Index d = rho.rows();
  const double keep = 1.0 - px - py - pz;
  // For a pair (r, c), (r^m, c^m) both entries share the sign s of Z rho Z.
  const double alpha_same = keep + pz, beta_same = px + py;
  const double alpha_diff = keep - pz, beta_diff = px - py;
  for (Index c = 0; c < d; ++c) {
    const bool c_set = (c & m) != 0;
    const double alpha = c_set ? alpha_diff : alpha_same;
    const double beta = c_set ? beta_diff : beta_same;
    for (Index r = 0; r < d; ++r) {
      if (r & m) continue;
      const Complex a = rho(r, c);
      const Complex b = rho(r ^ m, c ^ m);
      rho(r, c) = alpha * a + beta * b;
      rho(r ^ m, c ^ m) = alpha * b + beta * a;
    }
  }
}

void project_qubit(Matrix& rho, int n_qubits, int qubit, int bit) {
  check_square(rho, n_qubits);
  const Index m = static_cast<Index>(qubit_mask(n_qubits, qubit));
  const Index d = rho.rows();
  for (Index c = 0; c < d; ++c) {
    const bool c_ok = ((c & m) != 0) == (bit != 0);
    for (Index r = 0; r < d; ++r) {
      const bool r_ok = ((r & m) != 0) == (bit != 0);
      if (!(c_ok && r_ok)) rho(r, c) = 0.0;
    }
  }
}

void reset_qubit(Matrix& rho, int n_qubits, int qubit) {
  check_square(rho, n_qubits);
  const Index m = static_cast<Index>(qubit_mask(n_qubits, qubit));
  const Index d = rho.rows();
  for (Index c = 0; c < d; ++c) {
    for (Index r = 0; r < d; ++r) {
      if ((r & m) || (c & m)) continue;
      rho(r, c) += rho(r | m, c | m);
    }
  }
  for (Index c = 0; c < d; ++c)
    for (Index r = 0; r < d; ++r)
      if ((r & m) || (c & m)) rho(r, c) = 0.0;
}

void walsh_hadamard_both(Matrix& rho) {
  const Index d = rho.rows();
  for (Index c = 0; c < d; ++c) {
    for (Index h = 1; h < d; h <<= 1) {
      for (Index i = 0; i < d; i += 2 * h) {
        for (Index j = i; j < i + h; ++j) {
          const Complex a = rho(j, c), b = rho(j + h, c);
          rho(j, c) = a + b;
          rho(j + h, c) = a - b;
        }
      }
    }
  }
  for (Index h = 1; h < d; h <<= 1) {
    for (Index i = 0; i < d; i += 2 * h) {
      for (Index j = i; j < i + h; ++j) {
        for (Index r = 0; r < d; ++r) {
          const Complex a = rho(r, j), b = rho(r, j + h);
          rho(r, j) = a + b;
          rho(r, j + h) = a - b;
        }
      }
    }
  }
  rho /= static_cast<double>(d);
}

Matrix superop_sandwich(const Matrix& a, const Matrix& b) { return kron(a, b.transpose()); }

Matrix superop_hamiltonian(const Matrix& h) {
  const Matrix id = Matrix::Identity(h.rows(), h.cols());
  return Complex(0.0, -1.0) * (kron(h, id) - kron(id, h.transpose()));
}

Matrix superop_double_commutator(const Matrix& a, double gamma) {
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  const Matrix a2 = a * a;
  return -0.5 * gamma * (kron(a2, id) - 2.0 * kron(a, a.transpose()) + kron(id, a2.transpose()));
}

Matrix superop_pauli_channel(int k, std::span<const double> px, std::span<const double> py,
                             std::span<const double> pz) {
  if (static_cast<int>(px.size()) != k || static_cast<int>(py.size()) != k || static_cast<int>(pz.size()) != k) {
    throw std::invalid_argument("superop_pauli_channel: probability count mismatch");
  }
  const auto kk = static_cast<Index>(dim_of(k));
  Matrix s = Matrix::Identity(kk * kk, kk * kk);
  std::vector<int> target(1);
  for (int q = 0; q < k; ++q) {
    // Apply the single-qubit channel to every column of the running superop.
    target[0] = q;
    for (Index col = 0; col < kk * kk; ++col) {
      Matrix block(kk, kk);
      for (Index l = 0; l < kk; ++l)
        for (Index m = 0; m < kk; ++m) block(l, m) = s(l * kk + m, col);
      apply_pauli_channel(block, k, q, px[q], py[q], pz[q]);
      for (Index l = 0; l < kk; ++l)
        for (Index m = 0; m < kk; ++m) s(l * kk + m, col) = block(l, m);
    }
  }
  return s;
}

}  // namespace qecdm
