#include "qecdm/ftqec.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "qecdm/kernels.hpp"

namespace qecdm {
namespace {

Matrix ground_state(int n) {
  const auto d = static_cast<Eigen::Index>(dim_of(n));
  Matrix rho = Matrix::Zero(d, d);
  rho(0, 0) = 1.0;
  return rho;
}

PulseSchedule shifted(const PulseSchedule& s, int offset, int n_qubits) {
  PulseSchedule out;
  out.n_qubits = n_qubits;
  for (const auto& item : s.items) {
    if (const auto* layer = std::get_if<PulseLayer>(&item)) {
      PulseLayer l = *layer;
      for (auto& t : l.terms) {
        t.q0 += offset;
        if (t.q1 >= 0) t.q1 += offset;
      }
      out.items.emplace_back(std::move(l));
    } else if (const auto* kick = std::get_if<PauliKick>(&item)) {
      out.items.emplace_back(PauliKick{kick->qubit + offset, kick->pauli});
    } else {
      auto m = std::get<MeasurementMarker>(item);
      for (int& q : m.qubits) q += offset;
      out.items.emplace_back(std::move(m));
    }
  }
  return out;
}

PulseSchedule with_mask(const PulseSchedule& s, std::size_t boundary, const PauliMask& p) {
  PulseSchedule out = s;
  for (int q = 0; q < s.n_qubits; ++q) {
    const char c = pauli_at(p, q);
    if (c != 'I') out = with_kick(out, boundary, q, c);
  }
  return out;
}

std::vector<int> layer_qubits(const ScheduleItem& item) {
  std::vector<int> qs;
  if (const auto* layer = std::get_if<PulseLayer>(&item)) {
    for (const auto& t : layer->terms) {
      qs.push_back(t.q0);
      if (t.q1 >= 0) qs.push_back(t.q1);
    }
  }
  return qs;
}

// out(r, c) = sum_{a,b} F(a,b) joint((r,b),(c,a)): Tr_anc[(I (x) F) joint].
Matrix contract_ancillas(const Matrix& joint, const Matrix& f, Eigen::Index d_data, Eigen::Index d_anc) {
  Matrix out(d_data, d_data);
  const Matrix ft = f.transpose();
  for (Eigen::Index r = 0; r < d_data; ++r)
    for (Eigen::Index c = 0; c < d_data; ++c)
      out(r, c) = joint.block(r * d_anc, c * d_anc, d_anc, d_anc).cwiseProduct(ft).sum();
  return out;
}

double trace_of(const Matrix& m) { return m.size() == 0 ? 0.0 : m.trace().real(); }

Circuit cat_prep_circuit() {
  Circuit c;
  c.n_qubits = 5;
  c.then(Gate{GateKind::Hadamard, 0});
  c.then(Gate{GateKind::CNOT, 0, 1});
  c.then(Gate{GateKind::CNOT, 1, 2});
  c.then_parallel({Gate{GateKind::CNOT, 2, 3}, Gate{GateKind::CNOT, 0, 4}});
  c.then(Gate{GateKind::CNOT, 3, 4});
  return c;
}

StageSpec bitflip_stage() {
  StageSpec st;
  st.n_data = 3;
  st.n_prep = 4;
  st.prep.n_qubits = 4;
  st.prep.then_parallel({Gate{GateKind::Hadamard, 0}, Gate{GateKind::Hadamard, 2}});
  st.prep.then_parallel({Gate{GateKind::CNOT, 0, 1}, Gate{GateKind::CNOT, 2, 3}});
  st.kept = {0, 1, 2, 3};
  // Data 0..2, Bell halves 3..6. Pair (3,4) reads Z0 Z1, pair (5,6) reads Z1 Z2.
  st.couple.n_qubits = 7;
  st.couple.then_parallel({Gate{GateKind::CZ, 0, 3}, Gate{GateKind::CZ, 1, 4}, Gate{GateKind::CZ, 1, 5},
                           Gate{GateKind::CZ, 2, 6}});
  st.decode.n_qubits = 4;
  st.decode.then_parallel({Gate{GateKind::Hadamard, 0}, Gate{GateKind::Hadamard, 1}, Gate{GateKind::Hadamard, 2},
                           Gate{GateKind::Hadamard, 3}});
  st.readout = {{0, 1}, {2, 3}};
  st.generators = {0, 1};
  return st;
}

StageSpec fivequbit_stage(const PauliString& g, int index) {
  StageSpec st;
  st.n_data = 5;
  st.n_prep = 5;
  st.prep = cat_prep_circuit();
  st.verifier = 4;
  st.kept = {0, 1, 2, 3};
  st.couple.n_qubits = 9;
  std::vector<Gate> first, second, third;
  int cat = 5;
  for (int q = 0; q < 5; ++q) {
    const char p = g.at(q);
    if (p == 'I') continue;
    if (p == 'X') {
      first.push_back(Gate{GateKind::CNOT, cat, q});
    } else if (p == 'Z') {
      first.push_back(Gate{GateKind::CZ, cat, q});
    } else {
      // controlled-Y = S_c CNOT CZ
      first.push_back(Gate{GateKind::CZ, cat, q});
      second.push_back(Gate{GateKind::CNOT, cat, q});
      third.push_back(Gate{GateKind::Phase, cat});
    }
    ++cat;
  }
  if (cat != 9) throw std::logic_error("five-qubit generator must have weight 4");
  for (auto* grp : {&first, &second, &third})
    if (!grp->empty()) st.couple.then_parallel(*grp);
  st.decode.n_qubits = 4;
  st.decode.then(Gate{GateKind::CNOT, 2, 3});
  st.decode.then(Gate{GateKind::CNOT, 1, 2});
  st.decode.then(Gate{GateKind::CNOT, 0, 1});
  st.decode.then(Gate{GateKind::Hadamard, 0});
  st.readout = {{0}};
  st.generators = {index};
  return st;
}

}  // namespace

const char* to_string(Protocol p) { return p == Protocol::A ? "A" : "B"; }

Protocol protocol_from_string(const std::string& name) {
  if (name == "A" || name == "a") return Protocol::A;
  if (name == "B" || name == "b") return Protocol::B;
  throw std::invalid_argument("unknown protocol '" + name + "'");
}

std::vector<StageSpec> detection_stages(const StabilizerCode& code) {
  if (code.name == "bit-flip-3") return {bitflip_stage()};
  if (code.name == "five-qubit") {
    std::vector<StageSpec> out;
    for (int i = 0; i < code.syndrome_bits(); ++i) out.push_back(fivequbit_stage(code.generators[i], i));
    return out;
  }
  throw std::invalid_argument("no syndrome-extraction circuit for code '" + code.name + "'");
}

BellPairResult prepare_bell_pair(const NoiseModel& noise, Parallelism level, const IntegratorConfig& cfg) {
  Circuit c;
  c.n_qubits = 2;
  c.then(Gate{GateKind::Hadamard, 0}).then(Gate{GateKind::CNOT, 0, 1});
  const PulseSchedule s = schedule_circuit(c, level);
  Evolver ev(noise, cfg);
  Matrix rho = ground_state(2);
  ev.run(rho, s);
  return {finalize_state(std::move(rho), cfg), s.total_duration()};
}

CatResult prepare_cat4_verified(const NoiseModel& noise, Parallelism level, const PovmError& povm,
                                const IntegratorConfig& cfg, double acceptance_floor, std::optional<PrepKick> kick) {
  povm.validate();
  PulseSchedule s = schedule_circuit(cat_prep_circuit(), level);
  const double duration = s.total_duration();
  if (kick) s = with_kick(s, kick->boundary, kick->qubit, kick->pauli);
  Evolver ev(noise, cfg);
  Matrix rho = ground_state(5);
  ev.run(rho, s);
  Matrix post = povm_instrument(rho, 5, 4, 0, povm.eta);
  const double acc = post.trace().real();
  if (acc < acceptance_floor) throw BeyondThreshold("cat-state verification acceptance below floor");
  const std::vector<int> keep{0, 1, 2, 3};
  return {finalize_state(partial_trace(post / acc, 5, keep), cfg), acc, duration};
}

std::string FaultSite::describe() const {
  static const char* names[] = {"before", "prep", "couple", "decode"};
  std::ostringstream os;
  os << "D" << detection + 1 << ' ' << names[static_cast<int>(segment)];
  if (segment != Segment::BeforeDetection) os << " stage " << stage << " @" << boundary;
  os << ' ';
  for (int q = 0; q < 32; ++q) {
    const char c = pauli_at(pauli, q);
    if (c != 'I') os << c << q;
  }
  return os.str();
}

QecEngine::QecEngine(StabilizerCode code, Protocol protocol, QecSettings settings)
    : code_(std::move(code)),
      protocol_(protocol),
      settings_(std::move(settings)),
      evolver_(settings_.noise, settings_.integrator) {
  settings_.povm.validate();
  const bool collective = settings_.noise.bath == Bath::Collective;
  route_ = settings_.route;
  if (route_ == Route::Auto) route_ = collective ? Route::Joint : Route::Factorized;
  if (route_ == Route::Factorized && collective)
    throw std::invalid_argument("factorized stages need a distinct bath");

  stages_ = detection_stages(code_);
  for (const auto& st : stages_) {
    Compiled c;
    c.prep = schedule_circuit(st.prep, settings_.level);
    c.couple = schedule_circuit(st.couple, settings_.level);
    c.decode = schedule_circuit(st.decode, settings_.level);
    std::set<int> measured;
    for (const auto& grp : st.readout) measured.insert(grp.begin(), grp.end());
    c.measured.assign(measured.begin(), measured.end());
    compiled_.push_back(std::move(c));
  }
  if (route_ == Route::Factorized) {
    for (int j = 0; j < static_cast<int>(stages_.size()); ++j) {
      clean_ancillas_.push_back(prepare_ancillas(j, nullptr));
      clean_effects_.push_back(readout_effects(j, nullptr));
    }
  }
  for (unsigned s = 0; s < (1u << code_.syndrome_bits()); ++s) {
    Circuit c;
    c.n_qubits = code_.n;
    const auto gates = code_.recovery_gates(s);
    if (!gates.empty()) c.then_parallel(gates);
    recovery_.push_back(schedule_circuit(c, settings_.level));
  }
  Circuit x;
  x.n_qubits = code_.n;
  std::vector<Gate> xs;
  for (int q = 0; q < code_.n; ++q)
    if (code_.logical_x.at(q) == 'X') xs.push_back(Gate{GateKind::PauliX, q});
  x.then_parallel(xs);
  logical_x_ = schedule_circuit(x, settings_.level);
}

double QecEngine::stage_duration(int stage) const {
  const auto& c = compiled_.at(static_cast<std::size_t>(stage));
  return c.prep.total_duration() + c.couple.total_duration() + c.decode.total_duration();
}

double QecEngine::detection_duration() const {
  double t = 0.0;
  for (int j = 0; j < static_cast<int>(stages_.size()); ++j) t += stage_duration(j);
  return t;
}

double QecEngine::recovery_duration(unsigned syndrome) const { return recovery_.at(syndrome).total_duration(); }

int QecEngine::max_register_qubits() const {
  int n = 0;
  for (const auto& st : stages_) {
    const int k = static_cast<int>(st.kept.size());
    n = std::max(n, route_ == Route::Factorized ? std::max(st.n_prep, st.n_data + k) : st.n_data + st.n_prep);
  }
  return n;
}

int QecEngine::max_live_ancillas() const {
  int n = 0;
  for (const auto& st : stages_) n = std::max(n, static_cast<int>(st.kept.size()));
  return n;
}

QecEngine::AncillaState QecEngine::prepare_ancillas(int stage, const FaultSite* fault) const {
  const auto& st = stages_[static_cast<std::size_t>(stage)];
  const auto& c = compiled_[static_cast<std::size_t>(stage)];
  const PulseSchedule s = fault ? with_mask(c.prep, fault->boundary, fault->pauli) : c.prep;
  Matrix rho = ground_state(st.n_prep);
  evolver_.run(rho, s);
  double acc = 1.0;
  if (st.verifier >= 0) {
    Matrix post = povm_instrument(rho, st.n_prep, st.verifier, 0, settings_.povm.eta);
    acc = post.trace().real();
    // A fault that is always caught by verification means the preparation
    // is repeated; the retry runs clean.
    if (fault && acc < 1e-9) return clean_ancillas_.empty() ? prepare_ancillas(stage, nullptr)
                                                           : clean_ancillas_[static_cast<std::size_t>(stage)];
    if (acc < settings_.acceptance_floor)
      throw BeyondThreshold("cat-state verification acceptance below floor");
    rho = post / acc;
  }
  if (static_cast<int>(st.kept.size()) != st.n_prep) rho = partial_trace(rho, st.n_prep, st.kept);
  return {std::move(rho), acc};
}

std::vector<Matrix> QecEngine::readout_effects(int stage, const FaultSite* fault) const {
  const auto& st = stages_[static_cast<std::size_t>(stage)];
  const auto& c = compiled_[static_cast<std::size_t>(stage)];
  const int k = static_cast<int>(st.kept.size());
  const auto d = static_cast<Eigen::Index>(dim_of(k));
  const int nb = static_cast<int>(st.readout.size());
  const std::size_t nm = c.measured.size();
  std::vector<Matrix> effects(std::size_t{1} << nb, Matrix::Zero(d, d));
  for (std::size_t pattern = 0; pattern < (std::size_t{1} << nm); ++pattern) {
    std::vector<int> bit(static_cast<std::size_t>(k), -1);
    for (std::size_t i = 0; i < nm; ++i)
      bit[static_cast<std::size_t>(c.measured[i])] = static_cast<int>((pattern >> (nm - 1 - i)) & 1u);
    Matrix op = Matrix::Identity(1, 1);
    for (int q = 0; q < k; ++q) {
      const int b = bit[static_cast<std::size_t>(q)];
      op = kron(op, b < 0 ? pauli::I() : povm_element(b, settings_.povm.eta));
    }
    unsigned o = 0;
    for (int g = 0; g < nb; ++g) {
      int parity = 0;
      for (int q : st.readout[static_cast<std::size_t>(g)]) parity ^= bit[static_cast<std::size_t>(q)];
      if (parity) o |= 1u << (nb - 1 - g);
    }
    effects[o] += op;
  }
  const PulseSchedule s = fault ? with_mask(c.decode, fault->boundary, fault->pauli) : c.decode;
  for (auto& f : effects) evolver_.run_adjoint(f, s);
  return effects;
}

std::vector<Matrix> QecEngine::run_stage(const Matrix& data, int stage, const std::vector<int>& outcomes,
                                         const FaultSite* fault) const {
  return route_ == Route::Factorized ? run_stage_factorized(data, stage, outcomes, fault)
                                     : run_stage_joint(data, stage, outcomes, fault);
}

std::vector<Matrix> QecEngine::run_stage_factorized(const Matrix& data, int stage, const std::vector<int>& outcomes,
                                                    const FaultSite* fault) const {
  using Seg = FaultSite::Segment;
  const auto j = static_cast<std::size_t>(stage);
  const auto& st = stages_[j];
  const auto& c = compiled_[j];
  const bool prep_fault = fault && fault->segment == Seg::Prep;
  const bool couple_fault = fault && fault->segment == Seg::Couple;
  const bool decode_fault = fault && fault->segment == Seg::Decode;

  const AncillaState fresh = prep_fault ? prepare_ancillas(stage, fault) : AncillaState{};
  const Matrix& anc = prep_fault ? fresh.state : clean_ancillas_[j].state;
  const std::vector<Matrix> fresh_effects = decode_fault ? readout_effects(stage, fault) : std::vector<Matrix>{};
  const std::vector<Matrix>& effects = decode_fault ? fresh_effects : clean_effects_[j];

  Matrix rho = data;
  evolver_.idle(rho, st.n_data, c.prep.total_duration());
  Matrix joint = kron(rho, anc);
  evolver_.run(joint, couple_fault ? with_mask(c.couple, fault->boundary, fault->pauli) : c.couple);

  const Eigen::Index dd = rho.rows();
  const Eigen::Index da = anc.rows();
  std::vector<Matrix> out;
  for (int o : outcomes) {
    Matrix r;
    if (o < 0) {
      r = partial_trace(joint, st.n_data + static_cast<int>(st.kept.size()), [&] {
        std::vector<int> keep(static_cast<std::size_t>(st.n_data));
        for (int q = 0; q < st.n_data; ++q) keep[static_cast<std::size_t>(q)] = q;
        return keep;
      }());
      // Effects sum to the identity only up to rounding; contract anyway when
      // the decode carries a fault, to keep the map exactly what was built.
      if (decode_fault) {
        Matrix sum = Matrix::Zero(da, da);
        for (const auto& f : effects) sum += f;
        r = contract_ancillas(joint, sum, dd, da);
      }
    } else {
      r = contract_ancillas(joint, effects[static_cast<std::size_t>(o)], dd, da);
    }
    evolver_.idle(r, st.n_data, c.decode.total_duration());
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Matrix> QecEngine::run_stage_joint(const Matrix& data, int stage, const std::vector<int>& outcomes,
                                               const FaultSite* fault) const {
  using Seg = FaultSite::Segment;
  const auto j = static_cast<std::size_t>(stage);
  const auto& st = stages_[j];
  const auto& c = compiled_[j];
  const int nd = st.n_data;
  const int k = static_cast<int>(st.kept.size());
  const int n_full = nd + st.n_prep;
  const int n_joint = nd + k;

  PulseSchedule prep = c.prep;
  if (fault && fault->segment == Seg::Prep) prep = with_mask(prep, fault->boundary, fault->pauli);
  Matrix rho = kron(data, ground_state(st.n_prep));
  evolver_.run(rho, shifted(prep, nd, n_full));
  if (st.verifier >= 0) {
    Matrix post = povm_instrument(rho, n_full, nd + st.verifier, 0, settings_.povm.eta);
    const double acc = post.trace().real() / trace_of(data);
    if (fault && fault->segment == Seg::Prep && acc < 1e-9) return run_stage_joint(data, stage, outcomes, nullptr);
    if (acc < settings_.acceptance_floor) throw BeyondThreshold("cat-state verification acceptance below floor");
    rho = post / acc;
  }
  if (k != st.n_prep) {
    std::vector<int> keep;
    for (int q = 0; q < nd; ++q) keep.push_back(q);
    for (int q : st.kept) keep.push_back(nd + q);
    rho = partial_trace(rho, n_full, keep);
  }
  PulseSchedule couple = c.couple;
  if (fault && fault->segment == Seg::Couple) couple = with_mask(couple, fault->boundary, fault->pauli);
  evolver_.run(rho, couple);
  PulseSchedule decode = c.decode;
  if (fault && fault->segment == Seg::Decode) decode = with_mask(decode, fault->boundary, fault->pauli);
  evolver_.run(rho, shifted(decode, nd, n_joint));

  const int nb = static_cast<int>(st.readout.size());
  const std::size_t nm = c.measured.size();
  std::vector<int> data_qubits(static_cast<std::size_t>(nd));
  for (int q = 0; q < nd; ++q) data_qubits[static_cast<std::size_t>(q)] = q;
  const auto dd = static_cast<Eigen::Index>(dim_of(nd));
  std::vector<Matrix> per_outcome(std::size_t{1} << nb, Matrix::Zero(dd, dd));
  for (std::size_t pattern = 0; pattern < (std::size_t{1} << nm); ++pattern) {
    std::vector<int> bit(static_cast<std::size_t>(k), 0);
    Matrix r = rho;
    for (std::size_t i = 0; i < nm; ++i) {
      const int q = c.measured[i];
      const int b = static_cast<int>((pattern >> (nm - 1 - i)) & 1u);
      bit[static_cast<std::size_t>(q)] = b;
      r = povm_instrument(r, n_joint, nd + q, b, settings_.povm.eta);
    }
    unsigned o = 0;
    for (int g = 0; g < nb; ++g) {
      int parity = 0;
      for (int q : st.readout[static_cast<std::size_t>(g)]) parity ^= bit[static_cast<std::size_t>(q)];
      if (parity) o |= 1u << (nb - 1 - g);
    }
    per_outcome[o] += partial_trace(r, n_joint, data_qubits);
  }
  std::vector<Matrix> out;
  for (int o : outcomes) {
    if (o >= 0) {
      out.push_back(per_outcome[static_cast<std::size_t>(o)]);
    } else {
      Matrix sum = Matrix::Zero(dd, dd);
      for (const auto& m : per_outcome) sum += m;
      out.push_back(std::move(sum));
    }
  }
  return out;
}

void QecEngine::apply_before_faults(Matrix& data, int ordinal, const std::vector<FaultSite>& faults) const {
  for (const auto& f : faults) {
    if (f.detection != ordinal || f.segment != FaultSite::Segment::BeforeDetection) continue;
    for (int q = 0; q < code_.n; ++q) {
      const char c = pauli_at(f.pauli, q);
      if (c != 'I') apply_pauli(data, code_.n, q, c);
    }
  }
}

unsigned QecEngine::stage_bits_to_syndrome(int stage, unsigned local) const {
  const auto& st = stages_[static_cast<std::size_t>(stage)];
  const int m = code_.syndrome_bits();
  const int nb = static_cast<int>(st.readout.size());
  unsigned s = 0;
  for (int g = 0; g < nb; ++g)
    if ((local >> (nb - 1 - g)) & 1u) s |= 1u << (m - 1 - st.generators[static_cast<std::size_t>(g)]);
  return s;
}

unsigned QecEngine::syndrome_to_stage_bits(int stage, unsigned syndrome) const {
  const auto& st = stages_[static_cast<std::size_t>(stage)];
  const int m = code_.syndrome_bits();
  const int nb = static_cast<int>(st.readout.size());
  unsigned local = 0;
  for (int g = 0; g < nb; ++g)
    if ((syndrome >> (m - 1 - st.generators[static_cast<std::size_t>(g)])) & 1u) local |= 1u << (nb - 1 - g);
  return local;
}

namespace {

const FaultSite* stage_fault(const std::vector<FaultSite>& faults, int ordinal, int stage) {
  const FaultSite* found = nullptr;
  for (const auto& f : faults) {
    if (f.detection != ordinal || f.stage != stage || f.segment == FaultSite::Segment::BeforeDetection) continue;
    if (found) throw std::invalid_argument("at most one fault per stage is supported");
    found = &f;
  }
  return found;
}

}  // namespace

std::vector<Matrix> QecEngine::detect_all(const Matrix& data, int ordinal, const std::vector<FaultSite>& faults) const {
  Matrix start = data;
  apply_before_faults(start, ordinal, faults);
  const double floor = settings_.prune_tol * trace_of(data);
  std::vector<std::pair<unsigned, Matrix>> live{{0u, std::move(start)}};
  for (int j = 0; j < static_cast<int>(stages_.size()); ++j) {
    const FaultSite* fault = stage_fault(faults, ordinal, j);
    const int nb = static_cast<int>(stages_[static_cast<std::size_t>(j)].readout.size());
    std::vector<int> all(std::size_t{1} << nb);
    for (int o = 0; o < (1 << nb); ++o) all[static_cast<std::size_t>(o)] = o;
    std::vector<std::pair<unsigned, Matrix>> next;
    for (auto& [s, rho] : live) {
      auto outs = run_stage(rho, j, all, fault);
      for (int o = 0; o < (1 << nb); ++o) {
        auto& r = outs[static_cast<std::size_t>(o)];
        if (trace_of(r) <= floor) continue;
        next.emplace_back(s | stage_bits_to_syndrome(j, static_cast<unsigned>(o)), std::move(r));
      }
    }
    live = std::move(next);
  }
  std::vector<Matrix> out(std::size_t{1} << code_.syndrome_bits());
  for (auto& [s, rho] : live) out[s] = std::move(rho);
  return out;
}

Matrix QecEngine::detect_path(const Matrix& data, unsigned syndrome, int ordinal,
                              const std::vector<FaultSite>& faults) const {
  Matrix rho = data;
  apply_before_faults(rho, ordinal, faults);
  const double floor = settings_.prune_tol * trace_of(data);
  for (int j = 0; j < static_cast<int>(stages_.size()); ++j) {
    const int o = static_cast<int>(syndrome_to_stage_bits(j, syndrome));
    rho = std::move(run_stage(rho, j, {o}, stage_fault(faults, ordinal, j)).front());
    if (trace_of(rho) <= floor) return Matrix::Zero(data.rows(), data.cols());
  }
  return rho;
}

Matrix QecEngine::detect_nonselective(const Matrix& data, int ordinal, const std::vector<FaultSite>& faults) const {
  Matrix rho = data;
  apply_before_faults(rho, ordinal, faults);
  for (int j = 0; j < static_cast<int>(stages_.size()); ++j)
    rho = std::move(run_stage(rho, j, {-1}, stage_fault(faults, ordinal, j)).front());
  return rho;
}

void QecEngine::apply_recovery(Matrix& data, unsigned syndrome) const {
  const auto& s = recovery_.at(syndrome);
  if (!s.items.empty()) evolver_.run(data, s);
}

QecRoundResult QecEngine::step(const DensityMatrix& data, const std::vector<FaultSite>& faults) const {
  if (data.n_qubits() != code_.n) throw std::invalid_argument("state does not cover the code's data qubits");
  const std::size_t n_syn = std::size_t{1} << code_.syndrome_bits();
  const Eigen::Index d = static_cast<Eigen::Index>(data.dim());
  const double t_det = detection_duration();
  const double floor = settings_.prune_tol;
  auto live = [&](const Matrix& m) { return trace_of(m) > floor; };

  const auto first = detect_all(data.matrix(), 0, faults);
  QecRoundResult res;
  double best = -1.0;
  for (unsigned s = 0; s < n_syn; ++s) {
    if (!live(first[s])) continue;
    ++res.branch_count;
    if (trace_of(first[s]) > best) {
      best = trace_of(first[s]);
      res.accepted_syndrome = s;
    }
  }

  Matrix out = Matrix::Zero(d, d);
  if (protocol_ == Protocol::B) {
    res.elapsed = t_det;
    res.expected_elapsed = t_det;
    Matrix rest = Matrix::Zero(d, d);
    bool any_rest = false;
    for (unsigned s = 0; s < n_syn; ++s) {
      if (!live(first[s])) continue;
      if (s == 0) {
        out += first[s];
        continue;
      }
      res.expected_elapsed += trace_of(first[s]) * t_det;
      rest += first[s];
      any_rest = true;
      const Matrix agree = detect_path(first[s], s, 1, faults);
      Matrix fixed = agree;
      apply_recovery(fixed, s);
      out += fixed - agree;
      res.expected_elapsed += trace_of(agree) * recovery_duration(s);
    }
    if (any_rest) out += detect_nonselective(rest, 1, faults);
  } else {
    res.elapsed = 2.0 * t_det;
    res.expected_elapsed = 2.0 * t_det;
    Matrix total = Matrix::Zero(d, d);
    Matrix disagree = Matrix::Zero(d, d);
    std::vector<Matrix> agree(n_syn), partial(n_syn);
    for (unsigned s = 0; s < n_syn; ++s) {
      if (!live(first[s])) continue;
      total += first[s];
      agree[s] = detect_path(first[s], s, 1, faults);
      Matrix fixed = agree[s];
      apply_recovery(fixed, s);
      out += fixed;
      res.expected_elapsed += trace_of(agree[s]) * recovery_duration(s);
      partial[s] = detect_nonselective(first[s], 1, faults) - agree[s];
      disagree += partial[s];
    }
    // Second detection of the total, grouped by its own outcome, supplies the
    // part of the disagreeing mass whose second syndrome is s.
    const auto second = detect_all(total, 1, faults);
    if (live(disagree)) {
      res.expected_elapsed += trace_of(disagree) * t_det;
      out += detect_nonselective(disagree, 2, faults);
      for (unsigned s = 0; s < n_syn; ++s) {
        Matrix a = Matrix::Zero(d, d);
        if (partial[s].size()) a += partial[s];
        if (second[s].size()) a += second[s];
        if (agree[s].size()) a -= agree[s];
        if (!live(a)) continue;
        const Matrix third = detect_path(a, s, 2, faults);
        Matrix fixed = third;
        apply_recovery(fixed, s);
        out += fixed - third;
        res.expected_elapsed += trace_of(third) * recovery_duration(s);
      }
    }
  }

  const double tr = out.trace().real();
  if (std::abs(tr - data.trace()) > 1e-8) throw std::runtime_error("trace drift in QEC step; reduce dt");
  res.post_state = DensityMatrix::normalized(std::move(out));
  return res;
}

double QecEngine::apply_logical_x(Matrix& data) const {
  evolver_.run(data, logical_x_);
  return logical_x_.total_duration();
}

double QecEngine::logical_x_duration() const { return logical_x_.total_duration(); }

QecRoundResult qec_step(const DensityMatrix& state, const StabilizerCode& code, Protocol protocol,
                        const QecSettings& settings) {
  return QecEngine(code, protocol, settings).step(state);
}

namespace {

std::vector<SyndromeBranch> syndrome_round(const DensityMatrix& data, const StabilizerCode& code,
                                           const QecSettings& settings) {
  const QecEngine engine(code, Protocol::A, settings);
  const auto all = engine.detect_all(data.matrix(), 0);
  std::vector<SyndromeBranch> out;
  for (unsigned s = 0; s < all.size(); ++s) {
    if (all[s].size() == 0) continue;
    const double p = all[s].trace().real() / data.trace();
    if (p <= 1e-15) continue;
    out.push_back(SyndromeBranch{s, p, DensityMatrix::normalized(all[s]), engine.detection_duration()});
  }
  return out;
}

}  // namespace

std::vector<SyndromeBranch> syndrome_round_bitflip(const DensityMatrix& data, const QecSettings& settings) {
  return syndrome_round(data, bit_flip_code(), settings);
}

std::vector<SyndromeBranch> syndrome_round_fivequbit(const DensityMatrix& data, const QecSettings& settings) {
  return syndrome_round(data, five_qubit_code(), settings);
}

std::vector<FaultSite> enumerate_fault_sites(const QecEngine& engine, const std::string& paulis, bool dedupe) {
  using Seg = FaultSite::Segment;
  const int detections = engine.protocol() == Protocol::A ? 2 : 1;
  const int n = engine.code().n;
  std::vector<FaultSite> out;
  std::set<std::tuple<int, int, int, std::size_t, std::uint32_t, std::uint32_t>> seen;
  auto push = [&](FaultSite f) {
    if (f.pauli.is_identity()) return;
    const auto key = std::make_tuple(f.detection, static_cast<int>(f.segment), f.stage, f.boundary, f.pauli.x, f.pauli.z);
    if (seen.insert(key).second) out.push_back(f);
  };
  for (int k = 0; k < detections; ++k) {
    for (int q = 0; q < n; ++q)
      for (char p : paulis) push(FaultSite{k, Seg::BeforeDetection, 0, 0, single_pauli(q, p)});
    for (int j = 0; j < static_cast<int>(engine.stages().size()); ++j) {
      for (Seg seg : {Seg::Prep, Seg::Couple, Seg::Decode}) {
        const PulseSchedule& s = seg == Seg::Prep     ? engine.prep_schedule(j)
                                 : seg == Seg::Couple ? engine.couple_schedule(j)
                                                      : engine.decode_schedule(j);
        const std::size_t len = s.items.size();
        for (std::size_t b = 0; b <= len; ++b) {
          std::set<int> adjacent;
          if (b > 0)
            for (int q : layer_qubits(s.items[b - 1])) adjacent.insert(q);
          if (b < len)
            for (int q : layer_qubits(s.items[b])) adjacent.insert(q);
          for (int q : adjacent) {
            for (char p : paulis) {
              FaultSite f{k, seg, j, b, single_pauli(q, p)};
              if (dedupe) {
                f.pauli = propagate_pauli(s, b, f.pauli);
                f.boundary = len;
              }
              push(f);
            }
          }
        }
      }
    }
  }
  return out;
}

DensityMatrix default_logical_input(const StabilizerCode& code) {
  if (code.name == "bit-flip-3") return DensityMatrix::basis_state(1, 0);
  return average_logical_input();
}

namespace {

CrashSeries run_experiment(const StabilizerCode& code, Protocol protocol, const QecSettings& settings,
                           const ExperimentOptions& options, bool with_x) {
  if (options.n_steps < 1) throw std::invalid_argument("n_steps must be positive");
  const QecEngine engine(code, protocol, settings);
  DensityMatrix logical = default_logical_input(code);
  DensityMatrix state = encode_ideal(code, logical);
  const QubitOperator x(1, pauli::X());
  CrashSeries series;
  double t = 0.0;
  double expected_total = 0.0;
  for (int n = 1; n <= options.n_steps; ++n) {
    double step_time = 0.0;
    if (with_x) {
      Matrix m = state.matrix();
      step_time += engine.apply_logical_x(m);
      state = finalize_state(std::move(m), settings.integrator);
      logical = logical.conjugated(x);
    }
    const QecRoundResult r = engine.step(state);
    state = r.post_state;
    step_time += r.elapsed;
    expected_total += (with_x ? engine.logical_x_duration() : 0.0) + r.expected_elapsed;
    t += step_time;
    series.tau = step_time;
    series.max_branch_count = std::max(series.max_branch_count, r.branch_count);
    const double p = perfect_decode_crash(code, state, logical);
    series.samples.push_back(CrashSample{n, t, p});
    if (p > options.stop_at) {
      series.early_stopped = n < options.n_steps;
      break;
    }
  }
  series.expected_tau = expected_total / static_cast<double>(series.samples.size());
  return series;
}

}  // namespace

CrashSeries memory_experiment(const StabilizerCode& code, Protocol protocol, const QecSettings& settings,
                              const ExperimentOptions& options) {
  return run_experiment(code, protocol, settings, options, false);
}

CrashSeries logical_x_experiment(const StabilizerCode& code, Protocol protocol, const QecSettings& settings,
                                 const ExperimentOptions& options) {
  return run_experiment(code, protocol, settings, options, true);
}

}  // namespace qecdm
