#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dnnens {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Fast invariant suite behind `dnnens selfcheck`: voting rules against
// exhaustive counting, a finite-difference gradient check, the ensemble
// variance-ratio simulation and the degenerate filter threshold.
std::vector<CheckResult> run_selfcheck(std::uint64_t seed = 2024);

}  // namespace dnnens
