#include "qecdm/codes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qecdm {
namespace {

// Single-qubit product table up to phase.
char pauli_product(char a, char b) {
  if (a == 'I') return b;
  if (b == 'I') return a;
  if (a == b) return 'I';
  const std::string xyz = "XYZ";
  for (char c : xyz)
    if (c != a && c != b) return c;
  return 'I';
}

std::vector<Matrix> syndrome_projectors(const StabilizerCode& code) {
  const int m = code.syndrome_bits();
  const auto d = static_cast<Eigen::Index>(dim_of(code.n));
  std::vector<Matrix> gens;
  for (const auto& g : code.generators) gens.push_back(g.matrix());
  std::vector<Matrix> out;
  for (unsigned s = 0; s < (1u << m); ++s) {
    Matrix p = Matrix::Identity(d, d);
    for (int i = 0; i < m; ++i) {
      const double sign = ((s >> (m - 1 - i)) & 1u) ? -1.0 : 1.0;
      p = p * (0.5 * (Matrix::Identity(d, d) + sign * gens[i]));
    }
    out.push_back(std::move(p));
  }
  return out;
}

void check_code(const StabilizerCode& code) {
  for (std::size_t i = 0; i < code.generators.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (!code.generators[i].commutes_with(code.generators[j])) throw std::logic_error("generators do not commute");
  for (const auto& g : code.generators) {
    const Matrix gm = g.matrix();
    if ((gm * code.codeword0 - code.codeword0).norm() > 1e-12 || (gm * code.codeword1 - code.codeword1).norm() > 1e-12) {
      throw std::logic_error("codeword is not stabilized by " + g.str());
    }
  }
}

}  // namespace

PauliString::PauliString(std::string ops) : ops_(std::move(ops)) {
  if (ops_.empty()) throw std::invalid_argument("empty Pauli string");
  for (char c : ops_)
    if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z') throw std::invalid_argument("bad Pauli string '" + ops_ + "'");
}

PauliString PauliString::identity(int n) { return PauliString(std::string(static_cast<std::size_t>(n), 'I')); }

PauliString PauliString::single(int n, int qubit, char p) {
  if (qubit < 0 || qubit >= n) throw std::invalid_argument("Pauli qubit out of range");
  std::string s(static_cast<std::size_t>(n), 'I');
  s[static_cast<std::size_t>(qubit)] = p;
  return PauliString(std::move(s));
}

int PauliString::weight() const {
  return static_cast<int>(std::count_if(ops_.begin(), ops_.end(), [](char c) { return c != 'I'; }));
}

bool PauliString::commutes_with(const PauliString& other) const {
  if (other.size() != size()) throw std::invalid_argument("Pauli string length mismatch");
  int anti = 0;
  for (int q = 0; q < size(); ++q) {
    const char a = at(q), b = other.at(q);
    if (a != 'I' && b != 'I' && a != b) ++anti;
  }
  return anti % 2 == 0;
}

PauliString PauliString::operator*(const PauliString& other) const {
  if (other.size() != size()) throw std::invalid_argument("Pauli string length mismatch");
  std::string s(ops_);
  for (int q = 0; q < size(); ++q) s[static_cast<std::size_t>(q)] = pauli_product(at(q), other.at(q));
  return PauliString(std::move(s));
}

Matrix PauliString::matrix() const {
  Matrix m = pauli::from_char(ops_.front());
  for (std::size_t i = 1; i < ops_.size(); ++i) m = kron(m, pauli::from_char(ops_[i]));
  return m;
}

unsigned StabilizerCode::syndrome_of(const PauliString& error) const {
  const int m = syndrome_bits();
  unsigned s = 0;
  for (int i = 0; i < m; ++i)
    if (!generators[static_cast<std::size_t>(i)].commutes_with(error)) s |= 1u << (m - 1 - i);
  return s;
}

std::vector<Gate> StabilizerCode::recovery_gates(unsigned syndrome) const {
  if (syndrome >= recovery.size()) throw std::invalid_argument("syndrome out of range");
  std::vector<Gate> gates;
  const PauliString& r = recovery[syndrome];
  for (int q = 0; q < n; ++q) {
    switch (r.at(q)) {
      case 'X': gates.push_back(Gate{GateKind::PauliX, q}); break;
      case 'Y': gates.push_back(Gate{GateKind::PauliY, q}); break;
      case 'Z': gates.push_back(Gate{GateKind::PauliZ, q}); break;
      default: break;
    }
  }
  return gates;
}

StabilizerCode bit_flip_code() {
  StabilizerCode c;
  c.name = "bit-flip-3";
  c.n = 3;
  c.generators = {PauliString("ZZI"), PauliString("IZZ")};
  // (M1, M2) -> recovery; M1 is the high bit.
  c.recovery = {PauliString("III"), PauliString("IIX"), PauliString("XII"), PauliString("IXI")};
  c.logical_x = PauliString("XXX");
  c.logical_z = PauliString("ZII");
  c.codeword0 = Vector::Zero(8);
  c.codeword0(0) = 1.0;
  c.codeword1 = Vector::Zero(8);
  c.codeword1(7) = 1.0;
  check_code(c);
  return c;
}

StabilizerCode five_qubit_code() {
  StabilizerCode c;
  c.name = "five-qubit";
  c.n = 5;
  c.generators = {PauliString("XZZXI"), PauliString("IXZZX"), PauliString("XIXZZ"), PauliString("ZXIXZ")};
  c.logical_x = PauliString("XXXXX");
  c.logical_z = PauliString("ZZZZZ");

  // Brute-force table: each syndrome maps to the unique Pauli of weight <= 1
  // producing it.
  c.recovery.assign(16, PauliString());
  std::vector<bool> filled(16, false);
  auto record = [&](const PauliString& e) {
    const unsigned s = c.syndrome_of(e);
    if (filled[s]) throw std::logic_error("five-qubit syndrome map is not injective");
    filled[s] = true;
    c.recovery[s] = e;
  };
  record(PauliString::identity(5));
  for (int q = 0; q < 5; ++q)
    for (char p : std::string("XYZ")) record(PauliString::single(5, q, p));

  // |0_L> is the normalized projection of |00000> onto the code space.
  Vector v = Vector::Zero(32);
  v(0) = 1.0;
  for (const auto& g : c.generators) v = 0.5 * (v + g.matrix() * v);
  c.codeword0 = v / v.norm();
  c.codeword1 = c.logical_x.matrix() * c.codeword0;
  check_code(c);
  return c;
}

StabilizerCode code_by_name(const std::string& name) {
  if (name == "bit-flip-3") return bit_flip_code();
  if (name == "five-qubit") return five_qubit_code();
  throw std::invalid_argument("unknown code '" + name + "'");
}

DensityMatrix encode_ideal(const StabilizerCode& code, const DensityMatrix& logical) {
  if (logical.n_qubits() != 1) throw std::invalid_argument("logical state must be a single qubit");
  Matrix v(code.codeword0.size(), 2);
  v.col(0) = code.codeword0;
  v.col(1) = code.codeword1;
  return DensityMatrix::normalized(v * logical.matrix() * v.adjoint());
}

double perfect_decode_crash(const StabilizerCode& code, const Matrix& rho, const DensityMatrix& ideal_logical) {
  const auto d = static_cast<Eigen::Index>(dim_of(code.n));
  if (rho.rows() != d || rho.cols() != d) throw std::invalid_argument("state does not cover the code's data qubits");
  const Matrix target = encode_ideal(code, ideal_logical).matrix();
  const auto projectors = syndrome_projectors(code);
  // F = sum_s Tr(R P rho P R target) = Tr(rho W), W = sum_s P R target R P.
  Matrix w = Matrix::Zero(d, d);
  for (unsigned s = 0; s < projectors.size(); ++s) {
    const Matrix r = code.recovery[s].matrix();
    w += projectors[s] * r * target * r * projectors[s];
  }
  const double f = rho.cwiseProduct(w.transpose()).sum().real();
  return std::clamp(1.0 - f, 0.0, 1.0);
}

double perfect_decode_crash(const StabilizerCode& code, const DensityMatrix& rho, const DensityMatrix& ideal_logical) {
  return perfect_decode_crash(code, rho.matrix(), ideal_logical);
}

}  // namespace qecdm
