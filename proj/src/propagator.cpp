#include "qecdm/propagator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "qecdm/kernels.hpp"

namespace qecdm {
namespace {

constexpr int kMaxFusedQubits = 2;

struct Component {
  std::vector<int> support;  // sorted
  PulseLayer layer;          // terms restricted to the support, same duration
};

std::vector<Component> split_components(const PulseLayer& layer, int n_qubits) {
  std::vector<int> parent(static_cast<std::size_t>(n_qubits));
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<bool> touched(static_cast<std::size_t>(n_qubits), false);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (const auto& t : layer.terms) {
    touched[t.q0] = true;
    if (t.kind == PulseKind::ZZ) {
      touched[t.q1] = true;
      parent[find(t.q0)] = find(t.q1);
    }
  }
  std::vector<Component> out;
  std::vector<int> root_to_component(static_cast<std::size_t>(n_qubits), -1);
  for (int q = 0; q < n_qubits; ++q) {
    if (!touched[q]) continue;
    const int r = find(q);
    if (root_to_component[r] < 0) {
      root_to_component[r] = static_cast<int>(out.size());
      out.push_back(Component{{}, PulseLayer{{}, layer.duration}});
    }
    out[root_to_component[r]].support.push_back(q);
  }
  for (const auto& t : layer.terms) out[root_to_component[find(t.q0)]].layer.terms.push_back(t);
  return out;
}

std::string layer_key(const PulseLayer& layer, const std::vector<int>& support, double t, char tag) {
  auto local = [&](int q) {
    return static_cast<int>(std::find(support.begin(), support.end(), q) - support.begin());
  };
  std::string key(1, tag);
  key += std::to_string(support.size());
  for (const auto& term : layer.terms) {
    key += '|';
    key += std::to_string(static_cast<int>(term.kind));
    key += ',';
    key += std::to_string(local(term.q0));
    key += ',';
    key += std::to_string(term.kind == PulseKind::ZZ ? local(term.q1) : -1);
    key += ',';
    key += std::to_string(term.strength);
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "@%a", t);
  key += buf;
  return key;
}

Matrix channel_superop(int k, int pos, const IdleChannel& c) {
  std::vector<double> px(static_cast<std::size_t>(k), 0.0), py(px), pz(px);
  px[pos] = c.px;
  py[pos] = c.py;
  pz[pos] = c.pz;
  return superop_pauli_channel(k, px, py, pz);
}

// Lifts a superoperator on `positions` (indices into a k-qubit block) to the
// whole block.
Matrix embed_superop(const Matrix& s, const std::vector<int>& positions, int k) {
  if (static_cast<int>(positions.size()) == k) {
    bool identity_order = true;
    for (int i = 0; i < k; ++i) identity_order = identity_order && positions[i] == i;
    if (identity_order) return s;
  }
  const auto kd = static_cast<Eigen::Index>(dim_of(k));
  Matrix out(kd * kd, kd * kd);
  Matrix e(kd, kd);
  for (Eigen::Index a = 0; a < kd; ++a) {
    for (Eigen::Index b = 0; b < kd; ++b) {
      e.setZero();
      e(a, b) = 1.0;
      apply_superop(e, s, positions, k);
      for (Eigen::Index l = 0; l < kd; ++l)
        for (Eigen::Index m = 0; m < kd; ++m) out(l * kd + m, a * kd + b) = e(l, m);
    }
  }
  return out;
}

std::vector<int> positions_in(const std::vector<int>& sub, const std::vector<int>& super) {
  std::vector<int> pos;
  pos.reserve(sub.size());
  for (int q : sub) pos.push_back(static_cast<int>(std::find(super.begin(), super.end(), q) - super.begin()));
  return pos;
}

double collective_weight(std::size_t index, int n_qubits) {
  return static_cast<double>(n_qubits - 2 * std::popcount(index));
}

// rho_lm *= exp(-(gamma/2)(s_l - s_m)^2 t) with s the eigenvalue of sum_i Z_i.
void collective_z_decay(Matrix& rho, int n_qubits, double gamma, double t) {
  const Eigen::Index d = rho.rows();
  std::vector<double> s(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) s[i] = collective_weight(static_cast<std::size_t>(i), n_qubits);
  // (s_l - s_m) takes only even values in [-2n, 2n]; tabulate the factors.
  std::vector<double> factor(static_cast<std::size_t>(2 * n_qubits + 1));
  for (int j = 0; j <= 2 * n_qubits; ++j) {
    const double diff = 2.0 * (j - n_qubits);
    factor[j] = std::exp(-0.5 * gamma * diff * diff * t);
  }
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < d; ++r) {
      const int j = static_cast<int>((s[r] - s[c]) / 2.0) + n_qubits;
      rho(r, c) *= factor[j];
    }
}

void collective_z_derivative(const Matrix& rho, Matrix& out, int n_qubits, double gamma) {
  const Eigen::Index d = rho.rows();
  for (Eigen::Index c = 0; c < d; ++c) {
    const double sc = collective_weight(static_cast<std::size_t>(c), n_qubits);
    for (Eigen::Index r = 0; r < d; ++r) {
      const double diff = collective_weight(static_cast<std::size_t>(r), n_qubits) - sc;
      out(r, c) += -0.5 * gamma * diff * diff * rho(r, c);
    }
  }
}

}  // namespace

const char* to_string(Bath bath) { return bath == Bath::Distinct ? "distinct" : "collective"; }

Bath bath_from_string(const std::string& name) {
  if (name == "distinct") return Bath::Distinct;
  if (name == "collective") return Bath::Collective;
  throw std::invalid_argument("unknown bath '" + name + "'");
}

void NoiseModel::validate() const {
  if (!std::isfinite(gamma0) || !std::isfinite(gamma1) || gamma0 < 0.0 || gamma1 < 0.0) {
    throw std::invalid_argument("noise strengths must be finite and non-negative");
  }
}

const char* to_string(Integrator method) {
  switch (method) {
    case Integrator::Auto: return "auto";
    case Integrator::Exact: return "exact";
    case Integrator::RK4: return "rk4";
    case Integrator::Split: return "split";
  }
  return "?";
}

Integrator integrator_from_string(const std::string& name) {
  if (name == "auto") return Integrator::Auto;
  if (name == "exact") return Integrator::Exact;
  if (name == "rk4") return Integrator::RK4;
  if (name == "split") return Integrator::Split;
  throw std::invalid_argument("unknown integrator '" + name + "'");
}

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !(split_dt > 0.0)) throw std::invalid_argument("integrator step must be positive");
  if (!(trace_tol > 0.0) || !(herm_tol > 0.0)) throw std::invalid_argument("integrator tolerances must be positive");
}

Matrix dissipator(const Matrix& rho, int n_qubits, const NoiseModel& noise) {
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  if (noise.bath == Bath::Distinct) {
    for (int q = 0; q < n_qubits; ++q) {
      if (noise.gamma0 > 0.0) {
        Matrix t = rho;
        apply_pauli(t, n_qubits, q, 'Z');
        out -= noise.gamma0 * (rho - t);
      }
      if (noise.gamma1 > 0.0) {
        Matrix t = rho;
        apply_pauli(t, n_qubits, q, 'X');
        out -= noise.gamma1 * (rho - t);
      }
    }
    return out;
  }
  if (noise.gamma0 > 0.0) collective_z_derivative(rho, out, n_qubits, noise.gamma0);
  if (noise.gamma1 > 0.0) {
    Matrix t = rho;
    walsh_hadamard_both(t);
    Matrix dt = Matrix::Zero(rho.rows(), rho.cols());
    collective_z_derivative(t, dt, n_qubits, noise.gamma1);
    walsh_hadamard_both(dt);
    out += dt;
  }
  return out;
}

IdleChannel idle_channel(const NoiseModel& noise, double t) {
  const double pz = 0.5 * (1.0 - std::exp(-2.0 * noise.gamma0 * t));
  const double px = 0.5 * (1.0 - std::exp(-2.0 * noise.gamma1 * t));
  // Z and X dephasing commute; their composition is a Pauli channel.
  return IdleChannel{px * (1.0 - pz), px * pz, pz * (1.0 - px)};
}

Evolver::Evolver(NoiseModel noise, IntegratorConfig cfg) : noise_(noise), cfg_(cfg) {
  noise_.validate();
  cfg_.validate();
  method_ = cfg_.method;
  if (method_ == Integrator::Auto) method_ = noise_.bath == Bath::Distinct ? Integrator::Exact : Integrator::Split;
  if (method_ == Integrator::Exact && noise_.bath != Bath::Distinct) {
    throw std::invalid_argument("the exact integrator requires a distinct bath");
  }
}

const Matrix& Evolver::component_superop(const PulseLayer& layer, const std::vector<int>& support,
                                         bool adjoint) const {
  const std::string key = layer_key(layer, support, layer.duration, adjoint ? 'A' : 'S');
  std::lock_guard lock(mutex_);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const int k = static_cast<int>(support.size());
  Matrix l = superop_hamiltonian(layer_hamiltonian(layer, support));
  for (int i = 0; i < k; ++i) {
    const int target = i;
    if (noise_.gamma0 > 0.0) {
      l += superop_double_commutator(embed(pauli::Z(), std::span<const int>(&target, 1), k).matrix(), noise_.gamma0);
    }
    if (noise_.gamma1 > 0.0) {
      l += superop_double_commutator(embed(pauli::X(), std::span<const int>(&target, 1), k).matrix(), noise_.gamma1);
    }
  }
  Matrix s = (l * layer.duration).exp();
  if (adjoint) s = s.adjoint().eval();
  return cache_.emplace(key, std::move(s)).first->second;
}

const Matrix& Evolver::component_unitary(const PulseLayer& layer, const std::vector<int>& support, double t) const {
  const std::string key = layer_key(layer, support, t, 'U');
  std::lock_guard lock(mutex_);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const Matrix h = layer_hamiltonian(layer, support);
  Matrix u = (Complex(0.0, -t) * h).exp();
  return cache_.emplace(key, std::move(u)).first->second;
}

void Evolver::run(Matrix& rho, const PulseSchedule& schedule) const {
  schedule.validate();
  if (rho.rows() != static_cast<Eigen::Index>(dim_of(schedule.n_qubits)) || rho.cols() != rho.rows()) {
    throw std::invalid_argument("state and schedule register sizes differ");
  }
  switch (method_) {
    case Integrator::Exact: run_exact(rho, schedule, false); break;
    case Integrator::RK4: run_rk4(rho, schedule); break;
    case Integrator::Split: run_split(rho, schedule, false); break;
    case Integrator::Auto: throw std::logic_error("unresolved integrator");
  }
}

void Evolver::run_adjoint(Matrix& op, const PulseSchedule& schedule) const {
  schedule.validate();
  if (op.rows() != static_cast<Eigen::Index>(dim_of(schedule.n_qubits)) || op.cols() != op.rows()) {
    throw std::invalid_argument("operator and schedule register sizes differ");
  }
  switch (method_) {
    case Integrator::Exact: run_exact(op, schedule, true); break;
    case Integrator::Split: run_split(op, schedule, true); break;
    case Integrator::RK4: {
      // The dissipator is self-adjoint; the adjoint flow flips the sign of
      // the commutator and runs the layers in reverse.
      PulseSchedule rev = schedule;
      std::reverse(rev.items.begin(), rev.items.end());
      for (auto& item : rev.items) {
        if (auto* l = std::get_if<PulseLayer>(&item))
          for (auto& t : l->terms) t.strength = -t.strength;
      }
      run_rk4(op, rev);
      break;
    }
    case Integrator::Auto: throw std::logic_error("unresolved integrator");
  }
}

void Evolver::idle(Matrix& rho, int n_qubits, double t) const {
  if (t <= 0.0) return;
  PulseSchedule s;
  s.n_qubits = n_qubits;
  s.items.emplace_back(PulseLayer{{}, t});
  run(rho, s);
}

void Evolver::run_exact(Matrix& rho, const PulseSchedule& schedule, bool adjoint) const {
  const int n = schedule.n_qubits;
  struct Block {
    std::vector<int> support;
    Matrix s;
  };
  std::vector<std::optional<Block>> blocks;
  std::vector<int> owner(static_cast<std::size_t>(n), -1);
  std::vector<double> pending(static_cast<std::size_t>(n), 0.0);

  auto flush_block = [&](int b) {
    Block& blk = *blocks[b];
    apply_superop(rho, blk.s, blk.support, n);
    ++applications_;
    for (int q : blk.support) owner[q] = -1;
    blocks[b].reset();
  };
  auto flush_idle = [&](int q) {
    if (pending[q] > 0.0) {
      const IdleChannel c = idle_channel(noise_, pending[q]);
      apply_pauli_channel(rho, n, q, c.px, c.py, c.pz);
      pending[q] = 0.0;
    }
  };
  auto add_component = [&](const std::vector<int>& support, Matrix s) {
    const int k = static_cast<int>(support.size());
    for (int i = 0; i < k; ++i) {
      const int q = support[i];
      if (owner[q] < 0 && pending[q] > 0.0) {
        s = s * channel_superop(k, i, idle_channel(noise_, pending[q]));
        pending[q] = 0.0;
      }
    }
    std::vector<int> involved;
    for (int q : support)
      if (owner[q] >= 0 && std::find(involved.begin(), involved.end(), owner[q]) == involved.end())
        involved.push_back(owner[q]);
    std::vector<int> joint = support;
    for (int b : involved)
      for (int q : blocks[b]->support) joint.push_back(q);
    std::sort(joint.begin(), joint.end());
    joint.erase(std::unique(joint.begin(), joint.end()), joint.end());
    const int kj = static_cast<int>(joint.size());
    const bool fits = kj <= kMaxFusedQubits ||
                      (involved.size() == 1 && blocks[involved.front()]->support.size() == joint.size());
    if (fits && !involved.empty()) {
      const auto kd = static_cast<Eigen::Index>(dim_of(kj));
      Matrix m = Matrix::Identity(kd * kd, kd * kd);
      for (int b : involved) {
        m = embed_superop(blocks[b]->s, positions_in(blocks[b]->support, joint), kj) * m;
        blocks[b].reset();
      }
      m = embed_superop(s, positions_in(support, joint), kj) * m;
      const int idx = static_cast<int>(blocks.size());
      blocks.emplace_back(Block{joint, std::move(m)});
      for (int q : joint) owner[q] = idx;
      return;
    }
    for (int b : involved) flush_block(b);
    const int idx = static_cast<int>(blocks.size());
    blocks.emplace_back(Block{support, std::move(s)});
    for (int q : support) owner[q] = idx;
  };
  auto idle_qubit = [&](int q, double t) {
    if (owner[q] >= 0) {
      Block& blk = *blocks[owner[q]];
      const int pos = static_cast<int>(std::find(blk.support.begin(), blk.support.end(), q) - blk.support.begin());
      blk.s = channel_superop(static_cast<int>(blk.support.size()), pos, idle_channel(noise_, t)) * blk.s;
    } else {
      pending[q] += t;
    }
  };

  auto process = [&](const ScheduleItem& item) {
    if (const auto* layer = std::get_if<PulseLayer>(&item)) {
      ++layers_;
      const auto comps = split_components(*layer, n);
      std::vector<bool> touched(static_cast<std::size_t>(n), false);
      for (const auto& c : comps)
        for (int q : c.support) touched[q] = true;
      for (int q = 0; q < n; ++q)
        if (!touched[q] && layer->duration > 0.0) idle_qubit(q, layer->duration);
      for (const auto& c : comps) add_component(c.support, component_superop(c.layer, c.support, adjoint));
    } else if (const auto* kick = std::get_if<PauliKick>(&item)) {
      if (owner[kick->qubit] >= 0) flush_block(owner[kick->qubit]);
      flush_idle(kick->qubit);
      apply_pauli(rho, n, kick->qubit, kick->pauli);
    } else {
      throw std::invalid_argument("propagation between measurements only: schedule contains a marker");
    }
  };

  if (adjoint) {
    for (auto it = schedule.items.rbegin(); it != schedule.items.rend(); ++it) process(*it);
  } else {
    for (const auto& item : schedule.items) process(item);
  }
  for (int b = 0; b < static_cast<int>(blocks.size()); ++b)
    if (blocks[b]) flush_block(b);
  for (int q = 0; q < n; ++q) flush_idle(q);
}

void Evolver::run_rk4(Matrix& rho, const PulseSchedule& schedule) const {
  const int n = schedule.n_qubits;
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  for (const auto& item : schedule.items) {
    if (const auto* kick = std::get_if<PauliKick>(&item)) {
      apply_pauli(rho, n, kick->qubit, kick->pauli);
      continue;
    }
    const auto* layer = std::get_if<PulseLayer>(&item);
    if (layer == nullptr) throw std::invalid_argument("propagation between measurements only: schedule contains a marker");
    ++layers_;
    const Matrix h = layer_hamiltonian(*layer, all);
    const Complex mi(0.0, -1.0);
    auto f = [&](const Matrix& r) -> Matrix {
      Matrix out = dissipator(r, n, noise_);
      out.noalias() += mi * (h * r);
      out.noalias() -= mi * (r * h);
      return out;
    };
    const long steps = std::max(1L, std::lround(layer->duration / cfg_.dt));
    const double dt = layer->duration / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) {
      const Matrix k1 = f(rho);
      const Matrix k2 = f(rho + 0.5 * dt * k1);
      const Matrix k3 = f(rho + 0.5 * dt * k2);
      const Matrix k4 = f(rho + dt * k3);
      rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
}

void Evolver::apply_dissipator_exact(Matrix& rho, int n_qubits, double t, bool z_part, bool x_part) const {
  if (t <= 0.0) return;
  if (noise_.bath == Bath::Distinct) {
    NoiseModel part = noise_;
    if (!z_part) part.gamma0 = 0.0;
    if (!x_part) part.gamma1 = 0.0;
    if (part.noiseless()) return;
    const IdleChannel c = idle_channel(part, t);
    for (int q = 0; q < n_qubits; ++q) apply_pauli_channel(rho, n_qubits, q, c.px, c.py, c.pz);
    return;
  }
  if (z_part && noise_.gamma0 > 0.0) collective_z_decay(rho, n_qubits, noise_.gamma0, t);
  if (x_part && noise_.gamma1 > 0.0) {
    walsh_hadamard_both(rho);
    collective_z_decay(rho, n_qubits, noise_.gamma1, t);
    walsh_hadamard_both(rho);
  }
}

void Evolver::run_split(Matrix& rho, const PulseSchedule& schedule, bool adjoint) const {
  const int n = schedule.n_qubits;
  // Dissipator pieces commute for a distinct bath or when only one is on.
  const bool commuting = noise_.bath == Bath::Distinct || noise_.gamma0 == 0.0 || noise_.gamma1 == 0.0;
  auto process = [&](const ScheduleItem& item) {
    if (const auto* kick = std::get_if<PauliKick>(&item)) {
      apply_pauli(rho, n, kick->qubit, kick->pauli);
      return;
    }
    const auto* layer = std::get_if<PulseLayer>(&item);
    if (layer == nullptr) throw std::invalid_argument("propagation between measurements only: schedule contains a marker");
    ++layers_;
    const auto comps = split_components(*layer, n);
    if (comps.empty() && commuting) {
      apply_dissipator_exact(rho, n, layer->duration, true, true);
      return;
    }
    const long steps = std::max(1L, std::lround(layer->duration / cfg_.split_dt));
    const double h = layer->duration / static_cast<double>(steps);
    auto half = [&](bool leading) {
      if (commuting) {
        apply_dissipator_exact(rho, n, 0.5 * h, true, true);
      } else if (leading) {
        apply_dissipator_exact(rho, n, 0.5 * h, true, false);
        apply_dissipator_exact(rho, n, 0.5 * h, false, true);
      } else {
        apply_dissipator_exact(rho, n, 0.5 * h, false, true);
        apply_dissipator_exact(rho, n, 0.5 * h, true, false);
      }
    };
    half(true);
    for (long s = 0; s < steps; ++s) {
      for (const auto& c : comps) apply_unitary(rho, component_unitary(c.layer, c.support, adjoint ? -h : h), c.support, n);
      if (s + 1 < steps) {
        if (commuting) {
          apply_dissipator_exact(rho, n, h, true, true);
        } else {
          apply_dissipator_exact(rho, n, 0.5 * h, false, true);
          apply_dissipator_exact(rho, n, h, true, false);
          apply_dissipator_exact(rho, n, 0.5 * h, false, true);
        }
      }
    }
    half(false);
  };
  if (adjoint) {
    for (auto it = schedule.items.rbegin(); it != schedule.items.rend(); ++it) process(*it);
  } else {
    for (const auto& item : schedule.items) process(item);
  }
}

DensityMatrix finalize_state(Matrix m, const IntegratorConfig& cfg) {
  const double drift = std::abs(m.trace().real() - 1.0);
  if (drift > cfg.trace_tol) {
    throw std::runtime_error("trace drift " + std::to_string(drift) + " exceeds tolerance; reduce dt");
  }
  m = (0.5 * (m + m.adjoint())).eval();
  if (cfg.check_positivity) {
    const double lo = min_eigenvalue(m);
    if (lo < -cfg.positivity_tol) {
      throw std::runtime_error("negative eigenvalue " + std::to_string(lo) + " beyond tolerance; reduce dt");
    }
  }
  // Renormalize away the (tolerated) drift so the invariant holds exactly.
  m /= m.trace().real();
  return DensityMatrix::from_matrix(std::move(m));
}

DensityMatrix propagate(const DensityMatrix& rho, const PulseSchedule& schedule, const NoiseModel& noise,
                        const IntegratorConfig& cfg) {
  if (rho.n_qubits() != schedule.n_qubits) throw std::invalid_argument("state and schedule register sizes differ");
  Evolver ev(noise, cfg);
  Matrix m = rho.matrix();
  ev.run(m, schedule);
  return finalize_state(std::move(m), cfg);
}

double bare_qubit_crash(const BareExperiment& experiment, const NoiseModel& noise, const DensityMatrix& initial,
                        const IntegratorConfig& cfg) {
  if (initial.n_qubits() != 1) throw std::invalid_argument("bare experiment needs a one-qubit initial state");
  Evolver ev(noise, cfg);
  Matrix m = initial.matrix();
  DensityMatrix ideal = initial;
  if (experiment.kind == BareExperiment::Kind::Memory) {
    if (experiment.duration < 0.0) throw std::invalid_argument("idle time must be non-negative");
    ev.idle(m, 1, experiment.duration);
  } else {
    if (experiment.gates < 0) throw std::invalid_argument("gate count must be non-negative");
    PulseSchedule s;
    s.n_qubits = 1;
    const PulseSchedule x = compile_gate(Gate{GateKind::PauliX, 0}, Parallelism::Sequential, 1);
    for (int i = 0; i < experiment.gates; ++i) s.append(x);
    ev.run(m, s);
    if (experiment.gates % 2 == 1) {
      ideal = ideal.conjugated(QubitOperator(1, pauli::X()));
    }
  }
  return 1.0 - fidelity(finalize_state(std::move(m), cfg), ideal);
}

}  // namespace qecdm
