#pragma once

#include "detail/discretization.hpp"
#include "resinv/simulator.hpp"

#include <cstddef>
#include <limits>

namespace resinv::detail {

inline constexpr std::size_t max_stage_count = 2'000'000;

struct StepChoice {
  double dt;
  StepLimit limit;
  Index cell;
};

/// dt = min(max_dt, cfl * phiV_i / (f'max * out_i), remaining). A step that
/// reaches the report time to within roundoff is taken as the report step.
inline StepChoice choose_step(const Discretization& disc, const Vector& outflow, double cfl,
                              double max_dt, double remaining) {
  StepChoice c{max_dt, StepLimit::max_dt, -1};
  const Vector& pv = disc.pore_volume();
  const double slope = disc.max_flow_slope();
  for (Index i = 0; i < pv.size(); ++i) {
    if (!(outflow[i] > 0.0)) continue;
    const double cand = cfl * pv[i] / (slope * outflow[i]);
    if (cand < c.dt) c = {cand, StepLimit::cfl, i};
  }
  if (remaining <= c.dt * (1.0 + 1e-12)) c = {remaining, StepLimit::report, -1};
  return c;
}

}  // namespace resinv::detail
