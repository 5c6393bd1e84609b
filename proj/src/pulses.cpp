#include "qecdm/pulses.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "qecdm/kernels.hpp"

namespace qecdm {
namespace {

constexpr double kTimeTol = 1e-12;

std::vector<int> term_qubits(const PulseTerm& t) {
  if (t.kind == PulseKind::ZZ) return {t.q0, t.q1};
  return {t.q0};
}

void check_term(const PulseTerm& t, int n_qubits) {
  if (t.strength < -1 || t.strength > 1) throw std::invalid_argument("pulse strength must be -1, 0 or +1");
  if (t.q0 < 0 || t.q0 >= n_qubits) throw std::invalid_argument("pulse term qubit out of range");
  if (t.kind == PulseKind::ZZ) {
    if (t.q1 < 0 || t.q1 >= n_qubits) throw std::invalid_argument("pulse term qubit out of range");
    if (t.q1 == t.q0) throw std::invalid_argument("ZZ term needs two distinct qubits");
  }
}

PulseLayer single(PulseKind kind, int q, int strength, double duration) {
  return PulseLayer{{PulseTerm{kind, q, -1, strength}}, duration};
}

std::vector<PulseLayer> hadamard_layers(int q) {
  return {single(PulseKind::Z, q, 1, kQuarterPi), single(PulseKind::X, q, 1, kQuarterPi),
          single(PulseKind::Z, q, 1, kQuarterPi)};
}

std::vector<PulseLayer> cz_layers(int a, int b, Parallelism level) {
  const PulseTerm zz{PulseKind::ZZ, a, b, 1};
  const PulseTerm za{PulseKind::Z, a, -1, -1};
  const PulseTerm zb{PulseKind::Z, b, -1, -1};
  switch (level) {
    case Parallelism::Sequential:
      return {PulseLayer{{zz}, kQuarterPi}, PulseLayer{{za}, kQuarterPi}, PulseLayer{{zb}, kQuarterPi}};
    case Parallelism::Increased:
      return {PulseLayer{{zz}, kQuarterPi}, PulseLayer{{za, zb}, kQuarterPi}};
    case Parallelism::Maximal:
      return {PulseLayer{{zz, za, zb}, kQuarterPi}};
  }
  throw std::logic_error("unreachable");
}

std::vector<PulseLayer> gate_layers(const Gate& g, Parallelism level) {
  switch (g.kind) {
    case GateKind::Hadamard: return hadamard_layers(g.q0);
    case GateKind::PauliX: return {single(PulseKind::X, g.q0, 1, 2 * kQuarterPi)};
    case GateKind::PauliZ: return {single(PulseKind::Z, g.q0, 1, 2 * kQuarterPi)};
    case GateKind::PauliY:
      return {single(PulseKind::Z, g.q0, 1, 2 * kQuarterPi), single(PulseKind::X, g.q0, 1, 2 * kQuarterPi)};
    case GateKind::Phase: return {single(PulseKind::Z, g.q0, 1, kQuarterPi)};
    case GateKind::CZ: return cz_layers(g.q0, g.q1, level);
    case GateKind::CNOT: {
      std::vector<PulseLayer> out = hadamard_layers(g.q1);
      for (auto& l : cz_layers(g.q0, g.q1, level)) out.push_back(std::move(l));
      for (auto& l : hadamard_layers(g.q1)) out.push_back(std::move(l));
      return out;
    }
  }
  throw std::invalid_argument("unknown gate kind");
}

void check_gate(const Gate& g, int n_qubits) {
  const auto qs = g.qubits();
  for (int q : qs) {
    if (q < 0 || q >= n_qubits) throw std::invalid_argument("gate qubit out of range");
  }
  if (qs.size() == 2 && qs[0] == qs[1]) throw std::invalid_argument("two-qubit gate needs distinct qubits");
}

bool overlaps(const Gate& a, const Gate& b) {
  for (int x : a.qubits())
    for (int y : b.qubits())
      if (x == y) return true;
  return false;
}

void check_group(const std::vector<Gate>& group) {
  for (std::size_t i = 0; i < group.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (overlaps(group[i], group[j]) && !(group[i].kind == GateKind::CZ && group[j].kind == GateKind::CZ)) {
        throw std::invalid_argument("overlapping qubits in a parallel group");
      }
    }
  }
}

// Runs the sequences side by side from time 0, splitting layers at every
// boundary so each output layer holds the terms active over its interval.
std::vector<PulseLayer> timeline_merge(const std::vector<std::vector<PulseLayer>>& seqs) {
  if (seqs.size() == 1) return seqs.front();
  std::vector<double> cuts{0.0};
  for (const auto& s : seqs) {
    double t = 0.0;
    for (const auto& l : s) {
      t += l.duration;
      cuts.push_back(t);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> uniq;
  for (double c : cuts) {
    if (uniq.empty() || c - uniq.back() > kTimeTol) uniq.push_back(c);
  }
  std::vector<PulseLayer> out;
  std::vector<std::size_t> pos(seqs.size(), 0);
  std::vector<double> start(seqs.size(), 0.0);
  for (std::size_t i = 0; i + 1 < uniq.size(); ++i) {
    const double mid = 0.5 * (uniq[i] + uniq[i + 1]);
    PulseLayer layer;
    layer.duration = uniq[i + 1] - uniq[i];
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      while (pos[s] < seqs[s].size() && start[s] + seqs[s][pos[s]].duration < mid) {
        start[s] += seqs[s][pos[s]].duration;
        ++pos[s];
      }
      if (pos[s] < seqs[s].size()) {
        for (const auto& t : seqs[s][pos[s]].terms) layer.terms.push_back(t);
      }
    }
    out.push_back(std::move(layer));
  }
  return out;
}

// All CZ gates of a cluster fused into diagonal layers of duration pi/4.
// Summed strengths beyond +-1 spill into further layers.
std::vector<PulseLayer> merged_cz_layers(const std::vector<Gate>& czs) {
  std::map<std::pair<int, int>, int> zz;
  std::map<int, int> z;
  for (const Gate& g : czs) {
    zz[{std::min(g.q0, g.q1), std::max(g.q0, g.q1)}] += 1;
    z[g.q0] -= 1;
    z[g.q1] -= 1;
  }
  std::vector<PulseLayer> out;
  for (;;) {
    PulseLayer layer;
    layer.duration = kQuarterPi;
    for (auto& [pq, s] : zz) {
      if (s == 0) continue;
      const int take = std::clamp(s, -1, 1);
      layer.terms.push_back(PulseTerm{PulseKind::ZZ, pq.first, pq.second, take});
      s -= take;
    }
    for (auto& [q, s] : z) {
      if (s == 0) continue;
      const int take = std::clamp(s, -1, 1);
      layer.terms.push_back(PulseTerm{PulseKind::Z, q, -1, take});
      s -= take;
    }
    if (layer.terms.empty()) break;
    out.push_back(std::move(layer));
  }
  return out;
}

std::vector<PulseLayer> maximal_group_layers(const std::vector<Gate>& group) {
  // Union CZ gates that share qubits into clusters.
  std::vector<std::size_t> parent(group.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < group.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (overlaps(group[i], group[j])) parent[find(i)] = find(j);

  std::vector<std::vector<PulseLayer>> seqs;
  std::vector<bool> done(group.size(), false);
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (done[i]) continue;
    std::vector<Gate> members;
    for (std::size_t j = i; j < group.size(); ++j) {
      if (find(j) == find(i)) {
        members.push_back(group[j]);
        done[j] = true;
      }
    }
    if (members.size() == 1) {
      seqs.push_back(gate_layers(members.front(), Parallelism::Maximal));
    } else {
      seqs.push_back(merged_cz_layers(members));
    }
  }
  return timeline_merge(seqs);
}

void append_layers(PulseSchedule& s, std::vector<PulseLayer> layers) {
  for (auto& l : layers) s.items.emplace_back(std::move(l));
}

PauliMask term_mask(const PulseTerm& t) {
  PauliMask m;
  switch (t.kind) {
    case PulseKind::Z: m.z = 1u << t.q0; break;
    case PulseKind::X: m.x = 1u << t.q0; break;
    case PulseKind::ZZ: m.z = (1u << t.q0) | (1u << t.q1); break;
  }
  return m;
}

bool anticommute(const PauliMask& a, const PauliMask& b) {
  return (std::popcount((a.x & b.z) ^ (a.z & b.x)) & 1) != 0;
}

Matrix term_local_pauli(PulseKind kind) {
  switch (kind) {
    case PulseKind::Z: return pauli::Z();
    case PulseKind::X: return pauli::X();
    case PulseKind::ZZ: return kron(pauli::Z(), pauli::Z());
  }
  throw std::logic_error("unreachable");
}

}  // namespace

double PulseSchedule::total_duration() const {
  double t = 0.0;
  for (const auto& item : items) {
    if (const auto* l = std::get_if<PulseLayer>(&item)) t += l->duration;
  }
  return t;
}

std::size_t PulseSchedule::layer_count() const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [](const auto& i) { return std::holds_alternative<PulseLayer>(i); }));
}

void PulseSchedule::append(const PulseSchedule& other) {
  if (other.n_qubits != n_qubits) throw std::invalid_argument("schedule register size mismatch");
  items.insert(items.end(), other.items.begin(), other.items.end());
}

void PulseSchedule::validate() const {
  if (n_qubits < 1 || n_qubits > kMaxQubits) throw std::invalid_argument("schedule register size out of range");
  for (const auto& item : items) {
    if (const auto* l = std::get_if<PulseLayer>(&item)) {
      if (!(l->duration > 0.0) || !std::isfinite(l->duration)) {
        throw std::invalid_argument("pulse layer duration must be positive");
      }
      for (const auto& t : l->terms) check_term(t, n_qubits);
    } else if (const auto* m = std::get_if<MeasurementMarker>(&item)) {
      for (int q : m->qubits)
        if (q < 0 || q >= n_qubits) throw std::invalid_argument("measured qubit out of range");
    } else if (const auto* k = std::get_if<PauliKick>(&item)) {
      if (k->qubit < 0 || k->qubit >= n_qubits) throw std::invalid_argument("kick qubit out of range");
    }
  }
}

std::vector<int> Gate::qubits() const {
  if (kind == GateKind::CZ || kind == GateKind::CNOT) return {q0, q1};
  return {q0};
}

const char* to_string(Parallelism level) {
  switch (level) {
    case Parallelism::Sequential: return "sequential";
    case Parallelism::Increased: return "increased";
    case Parallelism::Maximal: return "maximal";
  }
  return "?";
}

Parallelism parallelism_from_string(const std::string& name) {
  if (name == "sequential") return Parallelism::Sequential;
  if (name == "increased") return Parallelism::Increased;
  if (name == "maximal") return Parallelism::Maximal;
  throw std::invalid_argument("unknown parallelism level '" + name + "'");
}

Circuit& Circuit::then(Gate g) {
  groups.push_back({g});
  return *this;
}

Circuit& Circuit::then_parallel(std::vector<Gate> gs) {
  groups.push_back(std::move(gs));
  return *this;
}

Matrix ideal_gate_matrix(GateKind kind) {
  switch (kind) {
    case GateKind::Hadamard: return (pauli::X() + pauli::Z()) / std::sqrt(2.0);
    case GateKind::PauliX: return pauli::X();
    case GateKind::PauliY: return pauli::Y();
    case GateKind::PauliZ: return pauli::Z();
    case GateKind::Phase: {
      Matrix s = Matrix::Identity(2, 2);
      s(1, 1) = Complex(0.0, 1.0);
      return s;
    }
    case GateKind::CZ: {
      Matrix m = Matrix::Identity(4, 4);
      m(3, 3) = -1.0;
      return m;
    }
    case GateKind::CNOT: {
      Matrix m = Matrix::Zero(4, 4);
      m(0, 0) = m(1, 1) = 1.0;
      m(2, 3) = m(3, 2) = 1.0;
      return m;
    }
  }
  throw std::invalid_argument("unknown gate kind");
}

QubitOperator ideal_circuit_unitary(const Circuit& circuit) {
  QubitOperator u = QubitOperator::identity(circuit.n_qubits);
  for (const auto& group : circuit.groups) {
    for (const Gate& g : group) {
      check_gate(g, circuit.n_qubits);
      const auto qs = g.qubits();
      u = embed(ideal_gate_matrix(g.kind), qs, circuit.n_qubits) * u;
    }
  }
  return u;
}

PulseSchedule compile_gate(const Gate& gate, Parallelism level, int n_qubits) {
  check_gate(gate, n_qubits);
  PulseSchedule s;
  s.n_qubits = n_qubits;
  append_layers(s, gate_layers(gate, level));
  return s;
}

PulseSchedule schedule_circuit(const Circuit& circuit, Parallelism level) {
  PulseSchedule s;
  s.n_qubits = circuit.n_qubits;
  for (const auto& group : circuit.groups) {
    for (const Gate& g : group) check_gate(g, circuit.n_qubits);
    check_group(group);
    switch (level) {
      case Parallelism::Sequential:
        for (const Gate& g : group) append_layers(s, gate_layers(g, level));
        break;
      case Parallelism::Increased: {
        std::vector<std::vector<Gate>> subgroups;
        for (const Gate& g : group) {
          auto it = std::find_if(subgroups.begin(), subgroups.end(), [&](const auto& sg) {
            return std::none_of(sg.begin(), sg.end(), [&](const Gate& h) { return overlaps(g, h); });
          });
          if (it == subgroups.end()) {
            subgroups.push_back({g});
          } else {
            it->push_back(g);
          }
        }
        for (const auto& sg : subgroups) {
          std::vector<std::vector<PulseLayer>> seqs;
          for (const Gate& g : sg) seqs.push_back(gate_layers(g, level));
          append_layers(s, timeline_merge(seqs));
        }
        break;
      }
      case Parallelism::Maximal:
        if (!group.empty()) append_layers(s, maximal_group_layers(group));
        break;
    }
  }
  return s;
}

Matrix layer_hamiltonian(const PulseLayer& layer, std::span<const int> support) {
  const int k = static_cast<int>(support.size());
  const auto kd = static_cast<Eigen::Index>(dim_of(k));
  Matrix h = Matrix::Zero(kd, kd);
  auto local = [&](int q) {
    for (int i = 0; i < k; ++i)
      if (support[i] == q) return i;
    throw std::invalid_argument("pulse term outside the given support");
  };
  for (const auto& t : layer.terms) {
    if (t.strength == 0) continue;
    std::vector<int> targets;
    for (int q : term_qubits(t)) targets.push_back(local(q));
    h += static_cast<double>(t.strength) * embed(term_local_pauli(t.kind), targets, k).matrix();
  }
  return h;
}

QubitOperator layer_unitary(const PulseLayer& layer, int n_qubits) {
  for (const auto& t : layer.terms) check_term(t, n_qubits);
  std::vector<int> all(static_cast<std::size_t>(n_qubits));
  std::iota(all.begin(), all.end(), 0);
  const Matrix h = layer_hamiltonian(layer, all);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Eigen::VectorXd& w = es.eigenvalues();
  Vector phases(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) phases(i) = std::exp(Complex(0.0, -w(i) * layer.duration));
  Matrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  return QubitOperator(n_qubits, std::move(u));
}

QubitOperator schedule_unitary(const PulseSchedule& schedule) {
  schedule.validate();
  QubitOperator u = QubitOperator::identity(schedule.n_qubits);
  for (const auto& item : schedule.items) {
    if (const auto* l = std::get_if<PulseLayer>(&item)) {
      u = layer_unitary(*l, schedule.n_qubits) * u;
    } else if (const auto* k = std::get_if<PauliKick>(&item)) {
      const int q = k->qubit;
      u = embed(pauli::from_char(k->pauli), std::span<const int>(&q, 1), schedule.n_qubits) * u;
    } else {
      throw std::invalid_argument("schedule_unitary: schedule contains a measurement");
    }
  }
  return u;
}

PulseSchedule with_kick(const PulseSchedule& schedule, std::size_t boundary, int qubit, char pauli) {
  if (boundary > schedule.items.size()) throw std::invalid_argument("kick boundary out of range");
  if (qubit < 0 || qubit >= schedule.n_qubits) throw std::invalid_argument("kick qubit out of range");
  PulseSchedule out = schedule;
  out.items.insert(out.items.begin() + static_cast<std::ptrdiff_t>(boundary), PauliKick{qubit, pauli});
  return out;
}

PauliMask single_pauli(int qubit, char pauli) {
  PauliMask m;
  const std::uint32_t b = 1u << qubit;
  switch (pauli) {
    case 'I': break;
    case 'X': m.x = b; break;
    case 'Z': m.z = b; break;
    case 'Y': m.x = b; m.z = b; break;
    default: throw std::invalid_argument(std::string("unknown Pauli '") + pauli + "'");
  }
  return m;
}

char pauli_at(const PauliMask& p, int qubit) {
  const bool x = (p.x >> qubit) & 1u, z = (p.z >> qubit) & 1u;
  return x ? (z ? 'Y' : 'X') : (z ? 'Z' : 'I');
}

PauliMask propagate_pauli(const PulseSchedule& schedule, std::size_t from, PauliMask p) {
  for (std::size_t i = from; i < schedule.items.size(); ++i) {
    const auto& item = schedule.items[i];
    if (std::holds_alternative<MeasurementMarker>(item)) {
      throw std::invalid_argument("propagate_pauli: schedule contains a measurement");
    }
    const auto* l = std::get_if<PulseLayer>(&item);
    if (l == nullptr) continue;
    for (std::size_t a = 0; a < l->terms.size(); ++a)
      for (std::size_t b = 0; b < a; ++b)
        if (anticommute(term_mask(l->terms[a]), term_mask(l->terms[b]))) {
          throw std::invalid_argument("propagate_pauli: layer terms do not commute");
        }
    for (const auto& t : l->terms) {
      const double quarters = t.strength * l->duration / kQuarterPi;
      const double m = std::round(quarters);
      if (std::abs(quarters - m) > 1e-9) throw std::invalid_argument("propagate_pauli: non-Clifford layer");
      const PauliMask tm = term_mask(t);
      if ((static_cast<long long>(m) & 1) != 0 && anticommute(p, tm)) {
        p.x ^= tm.x;
        p.z ^= tm.z;
      }
    }
  }
  return p;
}

std::string schedule_to_json(const PulseSchedule& schedule) {
  using nlohmann::json;
  json items = json::array();
  for (const auto& item : schedule.items) {
    if (const auto* l = std::get_if<PulseLayer>(&item)) {
      json terms = json::array();
      for (const auto& t : l->terms) {
        json jt;
        jt["kind"] = t.kind == PulseKind::Z ? "Z" : (t.kind == PulseKind::X ? "X" : "ZZ");
        jt["qubits"] = term_qubits(t);
        jt["strength"] = t.strength;
        terms.push_back(jt);
      }
      items.push_back({{"type", "layer"}, {"duration", l->duration}, {"terms", terms}});
    } else if (const auto* m = std::get_if<MeasurementMarker>(&item)) {
      items.push_back({{"type", "measure"}, {"qubits", m->qubits}, {"reset_after", m->reset_after}});
    } else if (const auto* k = std::get_if<PauliKick>(&item)) {
      items.push_back({{"type", "kick"}, {"qubit", k->qubit}, {"pauli", std::string(1, k->pauli)}});
    }
  }
  json out{{"n_qubits", schedule.n_qubits}, {"total_duration", schedule.total_duration()}, {"items", items}};
  return out.dump(2);
}

}  // namespace qecdm
