#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qecdm {

struct CrashSample {
  int n = 0;         // computational step
  double t = 0.0;    // elapsed time, units of 1/epsilon
  double p = 0.0;    // crash probability after step n
};

struct CrashSeries {
  std::vector<CrashSample> samples;
  double tau = 0.0;             // duration of one computational step
  double expected_tau = 0.0;    // probability-weighted step duration
  bool early_stopped = false;   // stopped once P_c exceeded the stop level
  std::size_t max_branch_count = 0;

  void validate() const;
};

// Raised when the noise is so strong that a quantity stops being defined
// (P_c at or above 1/2, cat verification almost never accepting). Sweeps
// treat such points as far above threshold.
class BeyondThreshold : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qecdm
