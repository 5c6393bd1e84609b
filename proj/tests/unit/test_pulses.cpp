#include <doctest.h>

#include <cmath>
#include <vector>

#include <json.hpp>

#include "qecdm/codes.hpp"
#include "qecdm/pulses.hpp"

using namespace qecdm;

namespace {

// Distance between two unitaries after removing the best global phase.
double phase_distance(const Matrix& a, const Matrix& b) {
  const Complex overlap = (a.adjoint() * b).trace();
  if (std::abs(overlap) < 1e-12) return 1e9;
  const Complex phase = overlap / std::abs(overlap);
  return (b - phase * a).cwiseAbs().maxCoeff();
}

const Parallelism kLevels[] = {Parallelism::Sequential, Parallelism::Increased, Parallelism::Maximal};

Circuit bitflip_syndrome_circuit() {
  // data 0..2, ancillas 3..6 as two Bell pairs
  Circuit c;
  c.n_qubits = 7;
  c.then_parallel({{GateKind::Hadamard, 3}, {GateKind::Hadamard, 5}});
  c.then_parallel({{GateKind::CNOT, 3, 4}, {GateKind::CNOT, 5, 6}});
  c.then_parallel({{GateKind::Hadamard, 3}, {GateKind::Hadamard, 4}, {GateKind::Hadamard, 5}, {GateKind::Hadamard, 6}});
  c.then_parallel({{GateKind::CZ, 0, 3}, {GateKind::CZ, 1, 4}, {GateKind::CZ, 1, 5}, {GateKind::CZ, 2, 6}});
  c.then_parallel({{GateKind::Hadamard, 3}, {GateKind::Hadamard, 4}, {GateKind::Hadamard, 5}, {GateKind::Hadamard, 6}});
  return c;
}

}  // namespace

TEST_CASE("layer unitaries of single pulses") {
  PulseLayer z{{{PulseKind::Z, 0, -1, 1}}, kQuarterPi};
  Matrix rz = Matrix::Zero(2, 2);
  rz(0, 0) = std::exp(Complex(0, -kQuarterPi));
  rz(1, 1) = std::exp(Complex(0, kQuarterPi));
  CHECK((layer_unitary(z, 1).matrix() - rz).cwiseAbs().maxCoeff() < 1e-14);

  PulseLayer x{{{PulseKind::X, 0, -1, 1}}, kPi / 2};
  Matrix mix = Complex(0, -1) * pauli::X();
  CHECK((layer_unitary(x, 1).matrix() - mix).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("ZZ with opposite-sign Z terms realizes CZ") {
  const Matrix cz = ideal_gate_matrix(GateKind::CZ);
  // strengths (-1, +1, +1): CZ times e^{-i pi/4}
  PulseLayer a{{{PulseKind::ZZ, 0, 1, -1}, {PulseKind::Z, 0, -1, 1}, {PulseKind::Z, 1, -1, 1}}, kQuarterPi};
  CHECK((layer_unitary(a, 2).matrix() - std::exp(Complex(0, -kQuarterPi)) * cz).cwiseAbs().maxCoeff() < 1e-13);
  // the compiled form uses (+1, -1, -1): CZ times e^{+i pi/4}
  auto s = compile_gate({GateKind::CZ, 0, 1}, Parallelism::Maximal, 2);
  CHECK((schedule_unitary(s).matrix() - std::exp(Complex(0, kQuarterPi)) * cz).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("compiled gates equal their ideal unitaries up to a global phase") {
  const GateKind one[] = {GateKind::Hadamard, GateKind::PauliX, GateKind::PauliY, GateKind::PauliZ, GateKind::Phase};
  for (auto level : kLevels) {
    for (auto k : one) {
      for (int q = 0; q < 3; ++q) {
        Gate g{k, q};
        auto u = schedule_unitary(compile_gate(g, level, 3));
        const std::vector<int> t{q};
        CHECK(phase_distance(embed(ideal_gate_matrix(k), t, 3).matrix(), u.matrix()) < 1e-12);
      }
    }
    for (auto k : {GateKind::CZ, GateKind::CNOT}) {
      for (auto [a, b] : {std::pair{0, 1}, std::pair{2, 0}, std::pair{1, 2}}) {
        Gate g{k, a, b};
        auto u = schedule_unitary(compile_gate(g, level, 3));
        const std::vector<int> t{a, b};
        CHECK(phase_distance(embed(ideal_gate_matrix(k), t, 3).matrix(), u.matrix()) < 1e-12);
      }
    }
  }
}

TEST_CASE("CNOT truth table on |10>") {
  auto s = compile_gate({GateKind::CNOT, 0, 1}, Parallelism::Sequential, 2);
  auto out = DensityMatrix::basis_state(2, 2).conjugated(schedule_unitary(s));
  CHECK(out.matrix()(3, 3).real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.layer_count() == 9);  // H, CZ, H
}

TEST_CASE("gate durations per parallelism level") {
  auto h = compile_gate({GateKind::Hadamard, 0}, Parallelism::Sequential, 1);
  CHECK(h.layer_count() == 3);
  CHECK(h.total_duration() == doctest::Approx(3 * kQuarterPi));

  auto czm = compile_gate({GateKind::CZ, 0, 1}, Parallelism::Maximal, 2);
  CHECK(czm.layer_count() == 1);
  CHECK(czm.total_duration() == doctest::Approx(kQuarterPi));
  auto czs = compile_gate({GateKind::CZ, 0, 1}, Parallelism::Sequential, 2);
  CHECK(czs.layer_count() >= 2);
  CHECK(czs.total_duration() >= kPi / 2 - 1e-12);

  auto x = compile_gate({GateKind::PauliX, 0}, Parallelism::Sequential, 1);
  CHECK(x.total_duration() == doctest::Approx(kPi / 2));
}

TEST_CASE("disjoint CZ gates in parallel take one CZ duration under Increased") {
  Circuit c;
  c.n_qubits = 4;
  c.then_parallel({{GateKind::CZ, 0, 1}, {GateKind::CZ, 2, 3}});
  const double one = compile_gate({GateKind::CZ, 0, 1}, Parallelism::Increased, 4).total_duration();
  CHECK(schedule_circuit(c, Parallelism::Increased).total_duration() == doctest::Approx(one));
  CHECK(schedule_circuit(c, Parallelism::Sequential).total_duration() == doctest::Approx(2 * 3 * kQuarterPi));
  CHECK(phase_distance(ideal_circuit_unitary(c).matrix(),
                       schedule_unitary(schedule_circuit(c, Parallelism::Increased)).matrix()) < 1e-12);
}

TEST_CASE("empty circuit gives an empty schedule") {
  Circuit c;
  c.n_qubits = 2;
  for (auto level : kLevels) {
    auto s = schedule_circuit(c, level);
    CHECK(s.items.empty());
    CHECK(s.total_duration() == 0.0);
  }
}

TEST_CASE("syndrome circuit durations strictly decrease with parallelism") {
  auto c = bitflip_syndrome_circuit();
  const double ds = schedule_circuit(c, Parallelism::Sequential).total_duration();
  const double di = schedule_circuit(c, Parallelism::Increased).total_duration();
  const double dm = schedule_circuit(c, Parallelism::Maximal).total_duration();
  CHECK(ds > di);
  CHECK(di > dm);
  for (auto level : kLevels) {
    auto u = schedule_unitary(schedule_circuit(c, level));
    CHECK(phase_distance(ideal_circuit_unitary(c).matrix(), u.matrix()) < 1e-10);
  }
}

TEST_CASE("merged layers keep the noiseless unitary for every circuit family") {
  // Mixed groups: overlapping gates are serialized, disjoint ones merged.
  Circuit c;
  c.n_qubits = 5;
  c.then_parallel({{GateKind::Hadamard, 0}, {GateKind::CNOT, 1, 2}, {GateKind::PauliY, 3}});
  c.then_parallel({{GateKind::CNOT, 0, 1}, {GateKind::CZ, 2, 3}, {GateKind::Phase, 4}});
  c.then_parallel({{GateKind::CNOT, 2, 3}, {GateKind::CNOT, 0, 4}});
  c.then({GateKind::Hadamard, 4});
  double prev = 1e300;
  for (auto level : kLevels) {
    auto s = schedule_circuit(c, level);
    CHECK(phase_distance(ideal_circuit_unitary(c).matrix(), schedule_unitary(s).matrix()) < 1e-9);
    CHECK(s.total_duration() <= prev + 1e-12);
    prev = s.total_duration();
  }
}

TEST_CASE("overlapping gates in one group are rejected") {
  Circuit c;
  c.n_qubits = 3;
  c.then_parallel({{GateKind::CZ, 0, 1}, {GateKind::Hadamard, 1}});
  CHECK_THROWS(schedule_circuit(c, Parallelism::Maximal));
  CHECK_THROWS(compile_gate({GateKind::CZ, 0, 0}, Parallelism::Maximal, 2));
  CHECK_THROWS(compile_gate({GateKind::Hadamard, 3}, Parallelism::Maximal, 2));
}

TEST_CASE("Pauli propagation matches conjugation by the schedule") {
  auto s = schedule_circuit(bitflip_syndrome_circuit(), Parallelism::Sequential);
  const Matrix u = schedule_unitary(s).matrix();
  for (int q = 0; q < 7; ++q) {
    for (char p : {'X', 'Z'}) {
      auto m = propagate_pauli(s, 0, single_pauli(q, p));
      std::string ops(7, 'I');
      for (int k = 0; k < 7; ++k) ops[static_cast<std::size_t>(k)] = pauli_at(m, k);
      const Matrix expect = PauliString(ops).matrix();
      const Matrix got = u * PauliString::single(7, q, p).matrix() * u.adjoint();
      CHECK(phase_distance(expect, got) < 1e-9);
    }
  }
}

TEST_CASE("kicks and JSON dump") {
  auto s = compile_gate({GateKind::CNOT, 0, 1}, Parallelism::Maximal, 2);
  auto k = with_kick(s, 0, 0, 'X');
  CHECK(k.items.size() == s.items.size() + 1);
  // X on the control before CNOT becomes XX
  CHECK(phase_distance(schedule_unitary(k).matrix(),
                       PauliString("XX").matrix() * schedule_unitary(s).matrix()) < 1e-12);
  auto j = nlohmann::json::parse(schedule_to_json(s));
  CHECK(j["n_qubits"] == 2);
  CHECK(j["total_duration"].get<double>() == doctest::Approx(s.total_duration()));
}
