#pragma once

// Fault-tolerant syndrome extraction and QEC steps.
//
// A detection is a list of stages. Each stage prepares fresh ancillas in
// their own register, couples them to the data, decodes and reads them out.
// With a distinct bath the preparation and the readout factorize from the
// data, so only the coupling runs on the joint register (Route::Factorized);
// otherwise the whole stage runs forward on data + ancillas (Route::Joint).

#include <optional>
#include <string>
#include <vector>

#include "qecdm/codes.hpp"
#include "qecdm/measure.hpp"
#include "qecdm/propagator.hpp"
#include "qecdm/pulses.hpp"
#include "qecdm/series.hpp"

namespace qecdm {

enum class Protocol {
  A,  // detect twice, a third time on disagreement, act on the majority
  B,  // detect once, stop on zero, else detect again and act on agreement
};

const char* to_string(Protocol p);
Protocol protocol_from_string(const std::string& name);

enum class Route { Auto, Factorized, Joint };

struct QecSettings {
  NoiseModel noise;
  Parallelism level = Parallelism::Sequential;
  PovmError povm;
  IntegratorConfig integrator;
  Route route = Route::Auto;
  double acceptance_floor = 1e-3;  // cat verification acceptance below this is an error
  double prune_tol = 1e-14;        // syndrome branches lighter than this are dropped
};

// One syndrome-extraction stage. Ancilla indices refer to the preparation
// register; `kept` lists the ones that survive into the coupling register
// (placed after the data qubits, in order).
struct StageSpec {
  int n_data = 0;
  int n_prep = 0;
  Circuit prep;
  int verifier = -1;
  std::vector<int> kept;
  Circuit couple;
  Circuit decode;
  std::vector<std::vector<int>> readout;  // kept-ancilla indices XORed per bit
  std::vector<int> generators;            // generator index of each readout bit
};

std::vector<StageSpec> detection_stages(const StabilizerCode& code);

struct BellPairResult {
  DensityMatrix state;
  double duration = 0.0;
};
BellPairResult prepare_bell_pair(const NoiseModel& noise, Parallelism level, const IntegratorConfig& cfg = {});

struct CatResult {
  DensityMatrix state;
  double acceptance = 1.0;
  double duration = 0.0;
};
// Four-qubit cat state with one parity-check qubit, post-selected on the
// check reading 0. `kick` injects a Pauli before schedule item `boundary`.
struct PrepKick {
  std::size_t boundary = 0;
  int qubit = 0;
  char pauli = 'X';
};
CatResult prepare_cat4_verified(const NoiseModel& noise, Parallelism level, const PovmError& povm = {},
                                const IntegratorConfig& cfg = {}, double acceptance_floor = 1e-3,
                                std::optional<PrepKick> kick = std::nullopt);

struct SyndromeBranch {
  unsigned syndrome = 0;
  double probability = 0.0;
  DensityMatrix post_state;
  double duration = 0.0;
};
std::vector<SyndromeBranch> syndrome_round_bitflip(const DensityMatrix& data, const QecSettings& settings);
std::vector<SyndromeBranch> syndrome_round_fivequbit(const DensityMatrix& data, const QecSettings& settings);

// A single injected Pauli fault, already expressed on the register of its
// segment. BeforeDetection faults act on the data qubits.
struct FaultSite {
  enum class Segment { BeforeDetection, Prep, Couple, Decode };
  int detection = 0;  // ordinal of the detection within the QEC step
  Segment segment = Segment::BeforeDetection;
  int stage = 0;
  std::size_t boundary = 0;  // kicks are inserted before this schedule item
  PauliMask pauli;

  std::string describe() const;
};

struct QecRoundResult {
  DensityMatrix post_state = DensityMatrix::basis_state(1, 0);
  double elapsed = 0.0;           // dominant (zero-syndrome) path duration
  double expected_elapsed = 0.0;  // probability-weighted duration
  std::optional<unsigned> accepted_syndrome;  // most likely first-detection outcome
  std::size_t branch_count = 0;   // live syndrome branches after the first detection
};

class QecEngine {
 public:
  QecEngine(StabilizerCode code, Protocol protocol, QecSettings settings);

  const StabilizerCode& code() const { return code_; }
  Protocol protocol() const { return protocol_; }
  const QecSettings& settings() const { return settings_; }
  const Evolver& evolver() const { return evolver_; }
  Route route() const { return route_; }

  const std::vector<StageSpec>& stages() const { return stages_; }
  const PulseSchedule& prep_schedule(int stage) const { return compiled_[stage].prep; }
  const PulseSchedule& couple_schedule(int stage) const { return compiled_[stage].couple; }
  const PulseSchedule& decode_schedule(int stage) const { return compiled_[stage].decode; }
  double stage_duration(int stage) const;
  double detection_duration() const;
  double recovery_duration(unsigned syndrome) const;
  int max_register_qubits() const;
  int max_live_ancillas() const;

  // Detection instrument on (unnormalized) data states.
  std::vector<Matrix> detect_all(const Matrix& data, int ordinal, const std::vector<FaultSite>& faults = {}) const;
  Matrix detect_path(const Matrix& data, unsigned syndrome, int ordinal, const std::vector<FaultSite>& faults = {}) const;
  Matrix detect_nonselective(const Matrix& data, int ordinal, const std::vector<FaultSite>& faults = {}) const;
  void apply_recovery(Matrix& data, unsigned syndrome) const;

  QecRoundResult step(const DensityMatrix& data, const std::vector<FaultSite>& faults = {}) const;

  // Noisy transversal logical X; returns its duration.
  double apply_logical_x(Matrix& data) const;
  double logical_x_duration() const;

 private:
  struct Compiled {
    PulseSchedule prep, couple, decode;
    std::vector<int> measured;  // kept-ancilla indices read out
  };
  struct AncillaState {
    Matrix state;  // over the kept ancillas
    double acceptance = 1.0;
  };

  AncillaState prepare_ancillas(int stage, const FaultSite* fault) const;
  std::vector<Matrix> readout_effects(int stage, const FaultSite* fault) const;
  // Runs one stage and returns the data state for each requested local
  // outcome (index into the stage's 2^bits outcomes; -1 means the sum).
  std::vector<Matrix> run_stage(const Matrix& data, int stage, const std::vector<int>& outcomes,
                                const FaultSite* fault) const;
  std::vector<Matrix> run_stage_factorized(const Matrix& data, int stage, const std::vector<int>& outcomes,
                                           const FaultSite* fault) const;
  std::vector<Matrix> run_stage_joint(const Matrix& data, int stage, const std::vector<int>& outcomes,
                                      const FaultSite* fault) const;
  void apply_before_faults(Matrix& data, int ordinal, const std::vector<FaultSite>& faults) const;
  unsigned stage_bits_to_syndrome(int stage, unsigned local) const;
  unsigned syndrome_to_stage_bits(int stage, unsigned syndrome) const;

  StabilizerCode code_;
  Protocol protocol_;
  QecSettings settings_;
  Evolver evolver_;
  Route route_;
  std::vector<StageSpec> stages_;
  std::vector<Compiled> compiled_;
  std::vector<AncillaState> clean_ancillas_;
  std::vector<std::vector<Matrix>> clean_effects_;
  std::vector<PulseSchedule> recovery_;
  PulseSchedule logical_x_;
};

QecRoundResult qec_step(const DensityMatrix& state, const StabilizerCode& code, Protocol protocol,
                        const QecSettings& settings);

// Every single-fault location of one QEC step: Paulis from `paulis` (e.g.
// "X" or "XYZ") on each qubit at each layer boundary next to a layer acting
// on that qubit. With `dedupe`, sites are replaced by their propagated
// effect at the end of their segment and duplicates dropped.
std::vector<FaultSite> enumerate_fault_sites(const QecEngine& engine, const std::string& paulis, bool dedupe);

// The code's reference logical input: |0> for the bit-flip code, the
// averaged state rho_0 otherwise.
DensityMatrix default_logical_input(const StabilizerCode& code);

struct ExperimentOptions {
  int n_steps = 10;
  double stop_at = 0.4;  // stop early once P_c exceeds this
};

CrashSeries memory_experiment(const StabilizerCode& code, Protocol protocol, const QecSettings& settings,
                              const ExperimentOptions& options = {});
CrashSeries logical_x_experiment(const StabilizerCode& code, Protocol protocol, const QecSettings& settings,
                                 const ExperimentOptions& options = {});

}  // namespace qecdm
