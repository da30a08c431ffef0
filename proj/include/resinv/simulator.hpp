#pragma once

#include "resinv/grid_model.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace resinv {

double rel_perm_water(double s, const PhysicalParams& ph);
double rel_perm_oil(double s, const PhysicalParams& ph);

struct Mobilities {
  double water;  // k_rw / mu_w
  double total;  // k_ro / mu_o + k_rw / mu_w
};

Mobilities mobilities(double s, const PhysicalParams& ph);

enum class ObservationKind { bhp, water_rate, oil_rate };

const char* to_string(ObservationKind kind) noexcept;

struct ObservationEntry {
  std::size_t report;  // 0-based report index
  double time;         // s
  std::size_t well;    // index into ReservoirModel::wells
  ObservationKind kind;
};

/// Per report: BHP at every injector, water rate at every producer, oil rate
/// at every producer, in well order.
std::vector<ObservationEntry> observation_layout(const ReservoirModel& model);

struct ObservationVector {
  Vector values;  // Pa for BHP, m^3/s for rates (positive magnitudes)
  std::vector<ObservationEntry> layout;

  Index size() const noexcept { return values.size(); }
};

struct ReservoirState {
  Field pressure;
  Field saturation;
  double time = 0.0;
};

/// Pressure for the given saturation and the rates of report interval
/// `interval`, normalised to mean p0.
Field solve_pressure(const Field& u, const Field& s, const ReservoirModel& model,
                     std::size_t interval = 0);

/// One explicit upwind step of length dt. Throws NumericalError when dt
/// exceeds the stability bound of the explicit scheme.
Field advance_saturation(const Field& u, const Field& p, const Field& s, double dt,
                         const ReservoirModel& model, std::size_t interval = 0);

enum class StepLimit { max_dt, cfl, report };

/// One IMPES stage, mapping state k to state k+1.
struct StageRecord {
  double dt = 0.0;
  std::size_t interval = 0;
  StepLimit limit = StepLimit::max_dt;
  Index cfl_cell = -1;        // cell that set the step when limit == cfl
  bool last_in_interval = false;
};

struct SimulationDiagnostics {
  double max_pressure_residual = 0.0;  // max over solves of |A p - b| / |b|
  double max_water_imbalance = 0.0;    // pre-clamp volume balance, relative to injected volume
  double max_clamp_violation = 0.0;    // distance of pre-clamp values outside the bounds
  double max_cfl_number = 0.0;
  double min_saturation = 0.0;
  double max_saturation = 0.0;
};

/// Forward run with the stored trajectory the adjoint needs. Pressures are
/// stored with zero mean; add p0 for physical values.
struct SimulationResult {
  ObservationVector observations;
  std::vector<ReservoirState> reports;  // state at each report time
  std::vector<StageRecord> stages;
  std::vector<Vector> saturations;         // states 0..K
  std::vector<Vector> stage_pressures;     // pressure used by stage k
  std::vector<Vector> report_pressures;    // pressure behind report n's observations
  std::vector<std::size_t> report_state;   // state index k_n of report n
  SimulationDiagnostics diagnostics;
};

struct SimulateOptions {
  bool keep_trajectory = true;  // store per-stage states and pressures
  bool keep_reports = true;     // store ReservoirState per report
};

SimulationResult simulate(const Field& u, const ReservoirModel& model,
                          const SimulateOptions& options = {});

}  // namespace resinv
