#pragma once

#include "resinv/experiments.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace resinv {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured quantity
  double tolerance = 0.0;  // passes when value <= tolerance
};

/// Invariant battery on the configured model at a truth sample: pressure
/// residual, water balance, saturation bounds, producer rate split, adjoint
/// identity, directional finite differences, and the data-space/parameter-
/// space equivalence of both update formulas on random small instances.
std::vector<CheckResult> run_invariant_checks(const ExperimentSetup& setup);

}  // namespace resinv
