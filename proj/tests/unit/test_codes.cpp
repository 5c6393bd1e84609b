#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "qecdm/codes.hpp"

using namespace qecdm;

namespace {

std::vector<DensityMatrix> logical_basis() {
  const double s = 1.0 / std::sqrt(2.0);
  Vector plus(2), iplus(2);
  plus << s, s;
  iplus << s, Complex(0, s);
  return {DensityMatrix::basis_state(1, 0), DensityMatrix::basis_state(1, 1), DensityMatrix::from_pure(plus),
          DensityMatrix::from_pure(iplus), average_logical_input()};
}

DensityMatrix apply(const PauliString& p, const DensityMatrix& rho) {
  return rho.conjugated(QubitOperator(p.size(), p.matrix()));
}

std::vector<PauliString> single_errors(int n) {
  std::vector<PauliString> out;
  for (int q = 0; q < n; ++q)
    for (char p : {'X', 'Y', 'Z'}) out.push_back(PauliString::single(n, q, p));
  return out;
}

}  // namespace

TEST_CASE("Pauli string algebra") {
  CHECK(PauliString("XZZXI").weight() == 4);
  CHECK(PauliString("XI").commutes_with(PauliString("IZ")));
  CHECK_FALSE(PauliString("XI").commutes_with(PauliString("ZI")));
  CHECK(PauliString("XZ").commutes_with(PauliString("ZX")));
  CHECK((PauliString("XY") * PauliString("ZY")).str() == "YI");
  CHECK_THROWS(PauliString("XQ"));
}

TEST_CASE("generators commute, square to identity and stabilize the codewords") {
  for (const auto& code : {bit_flip_code(), five_qubit_code()}) {
    const Eigen::Index d = static_cast<Eigen::Index>(dim_of(code.n));
    for (const auto& g : code.generators) {
      Matrix m = g.matrix();
      CHECK((m * m - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-14);
      for (const auto& h : code.generators) CHECK(g.commutes_with(h));
      CHECK((m * code.codeword0 - code.codeword0).norm() < 1e-12);
      CHECK((m * code.codeword1 - code.codeword1).norm() < 1e-12);
    }
    CHECK(std::abs(code.codeword0.dot(code.codeword1)) < 1e-14);
    // logical operators act as X and Z on the codewords
    CHECK((code.logical_x.matrix() * code.codeword0 - code.codeword1).norm() < 1e-12);
    CHECK((code.logical_z.matrix() * code.codeword0 - code.codeword0).norm() < 1e-12);
    CHECK((code.logical_z.matrix() * code.codeword1 + code.codeword1).norm() < 1e-12);
  }
}

TEST_CASE("bit-flip recovery table") {
  auto code = bit_flip_code();
  CHECK(code.recovery[0].str() == "III");
  CHECK(code.recovery[2].str() == "XII");
  CHECK(code.recovery[3].str() == "IXI");
  CHECK(code.recovery[1].str() == "IIX");
  CHECK(code.syndrome_of(PauliString("IIX")) == 1u);

  auto flipped = apply(PauliString("IIX"), DensityMatrix::basis_state(3, 0));
  auto restored = apply(code.recovery[code.syndrome_of(PauliString("IIX"))], flipped);
  CHECK(restored.matrix()(0, 0).real() == doctest::Approx(1.0));
  CHECK(code.recovery_gates(0).empty());
}

TEST_CASE("five-qubit syndromes are distinct and match anticommutation") {
  auto code = five_qubit_code();
  CHECK(code.syndrome_of(PauliString::identity(5)) == 0u);
  CHECK(code.recovery[0].str() == "IIIII");
  std::set<unsigned> seen{0};
  for (const auto& e : single_errors(5)) {
    unsigned brute = 0;
    for (int i = 0; i < 4; ++i)
      if (!e.commutes_with(code.generators[static_cast<std::size_t>(i)])) brute |= 1u << (3 - i);
    CHECK(code.syndrome_of(e) == brute);
    CHECK(brute != 0u);
    seen.insert(brute);
  }
  CHECK(seen.size() == 16);
}

TEST_CASE("table roundtrip stabilizes both codewords") {
  auto code = five_qubit_code();
  auto errors = single_errors(5);
  errors.push_back(PauliString::identity(5));
  for (const auto& e : errors) {
    const auto fix = code.recovery[code.syndrome_of(e)] * e;
    Matrix m = fix.matrix();
    const Complex a = code.codeword0.dot(m * code.codeword0);
    const Complex b = code.codeword1.dot(m * code.codeword1);
    // up to a sign, a stabilizer acts as the same scalar on both codewords
    CHECK(std::abs(std::abs(a) - 1.0) < 1e-12);
    CHECK(std::abs(a - b) < 1e-12);
  }
}

TEST_CASE("encode_ideal examples") {
  auto bf = encode_ideal(bit_flip_code(), DensityMatrix::basis_state(1, 0));
  CHECK(bf.matrix()(0, 0).real() == doctest::Approx(1.0));
  auto code = five_qubit_code();
  auto enc = encode_ideal(code, average_logical_input());
  for (const auto& g : code.generators)
    CHECK((enc.matrix() * g.matrix()).trace().real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(perfect_decode_crash(code, enc, average_logical_input()) < 1e-12);
}

TEST_CASE("perfect decoding of single errors") {
  for (const auto& code : {bit_flip_code(), five_qubit_code()}) {
    std::vector<PauliString> errors;
    if (code.n == 3) {
      for (int q = 0; q < 3; ++q) errors.push_back(PauliString::single(3, q, 'X'));
    } else {
      errors = single_errors(5);
    }
    for (const auto& psi : logical_basis()) {
      auto enc = encode_ideal(code, psi);
      CHECK(perfect_decode_crash(code, enc, psi) < 1e-12);
      for (const auto& e : errors) CHECK(perfect_decode_crash(code, apply(e, enc), psi) < 1e-12);
    }
  }
}

TEST_CASE("two bit flips decode to the wrong codeword") {
  auto code = bit_flip_code();
  auto z = DensityMatrix::basis_state(1, 0);
  auto rho = apply(PauliString("XXI"), encode_ideal(code, z));
  CHECK(code.syndrome_of(PauliString("XXI")) == 1u);
  CHECK(perfect_decode_crash(code, rho, z) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("perfect decoding is convex-linear") {
  auto code = five_qubit_code();
  auto psi = average_logical_input();
  auto enc = encode_ideal(code, psi);
  auto bad = apply(PauliString("XXIII"), enc);
  const double pa = perfect_decode_crash(code, enc, psi);
  const double pb = perfect_decode_crash(code, bad, psi);
  Matrix mix = 0.3 * enc.matrix() + 0.7 * bad.matrix();
  CHECK(perfect_decode_crash(code, mix, psi) == doctest::Approx(0.3 * pa + 0.7 * pb).epsilon(1e-12));
  CHECK(pb > 0.1);
}

TEST_CASE("code lookup by name") {
  CHECK(code_by_name("bit-flip-3").n == 3);
  CHECK(code_by_name("five-qubit").n == 5);
  CHECK_THROWS(code_by_name("steane"));
}
