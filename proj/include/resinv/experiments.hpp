#pragma once

#include "resinv/geostat.hpp"
#include "resinv/reg_lm.hpp"
#include "resinv/sensitivity.hpp"
#include "resinv/simulator.hpp"
#include "resinv/std_lm.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace resinv {

inline constexpr double millidarcy = 9.869233e-16;  // m^2
inline constexpr double seconds_per_day = 86400.0;
inline constexpr double seconds_per_year = 365.0 * seconds_per_day;

/// Nine producers on the {1/4, 1/2, 3/4} lattice and four injectors on the
/// {3/8, 5/8} lattice. Each injector takes `injector_rate` (m^3/s); the
/// producers share the total withdrawal equally.
std::vector<WellSpec> standard_well_layout(const Grid& grid, double injector_rate,
                                           double well_radius = 0.1,
                                           double equivalent_radius_factor = 0.2);

struct DeskCaseOptions {
  int n = 32;
  double length = 2000.0;     // m
  double thickness = 100.0;   // m
  double porosity = 0.2;
  int report_count = 20;
  double total_time = 5.0 * seconds_per_year;
  double max_dt = 30.0 * seconds_per_day;
  double cfl = 0.5;
  double injector_rate = 2.6e3 / seconds_per_day;  // m^3/s
};

/// Square reservoir with the standard well layout and default physics.
ReservoirModel desk_case(const DeskCaseOptions& options = {});

struct PriorSpec {
  double mean = std::log(500.0 * millidarcy);  // log m^2
  std::optional<double> range;                 // m; a quarter of the longer side when unset
  double angle = 0.0;
  double axis_ratio = 1.0;
};

CovarianceOperator build_prior(const Grid& grid, const PriorSpec& prior, double kappa);

/// Diagonal data covariance. sigma holds standard deviations in observation
/// units.
struct NoiseModel {
  double fraction = 0.0;
  Vector sigma;
  std::uint64_t seed = 0;

  DataCovariance covariance() const;
};

/// sigma = f |BHP| for pressures and f |q_P| for both rate kinds. Throws
/// ConfigError for f <= 0 or a producer with zero total rate.
NoiseModel build_gamma(const ObservationVector& clean, const ReservoirModel& model, double fraction,
                       std::uint64_t seed = 0);

struct SyntheticData {
  Vector clean;  // G(u_true)
  Vector y;      // clean + xi, xi ~ N(0, diag(sigma^2))
  double eta;    // |Gamma^{-1/2} xi|
};

SyntheticData synthesize_data(const Vector& clean, const NoiseModel& noise);
SyntheticData synthesize_data(const ForwardModel& model, const Vector& truth, const NoiseModel& noise);

/// rho = 0.83, tau = 1.2 (tau * rho just below 1, hence allow_small_tau).
RegLMConfig desk_reg_config();

/// Everything a study shares across its sweep points.
struct ExperimentSetup {
  ReservoirModel model = desk_case();
  PriorSpec prior;
  double noise_fraction = 1e-2;
  double kappa = 1.0;
  RegLMConfig reg = desk_reg_config();
  StdLMConfig std_lm;
  SensitivityMethod method = SensitivityMethod::adjoint;
  double fd_step = 1e-6;
  int threads = 1;
  std::uint64_t truth_seed = 1;
  std::uint64_t noise_seed = 2;
};

/// Truth drawn from the kappa = 1 prior and its clean observations.
struct TruthCase {
  Vector truth;
  Vector prior_mean;
  ObservationVector clean;
};

TruthCase make_truth(const ExperimentSetup& setup);

enum class StudyKind { noise, rho_tau, kappa_reglm, kappa_stdlm };

const char* to_string(StudyKind kind) noexcept;
/// Throws ConfigError for an unknown name.
StudyKind study_kind_from_string(const std::string& name);

struct StudySpec {
  StudyKind kind = StudyKind::noise;
  std::vector<double> sweep;
  ExperimentSetup base;

  void validate() const;
};

struct StudyPoint {
  double value = 0.0;
  double fraction = 0.0;
  double kappa = 1.0;
  double rho = 0.0;  // regularizing runs only
  double tau = 0.0;
  double eta = 0.0;
  std::optional<RegLMResult> reg;
  std::optional<StdLMResult> std_lm;
  Vector final_u;
  double final_misfit = 0.0;
  double final_rel_error = 0.0;
  double prior_rel_error = 0.0;
  int iterations = 0;
  bool converged = false;
  Vector forecast;  // G(final_u)
};

/// The pieces a study sweeps over: forward map, truth, and builders for the
/// noise model at a given fraction and the prior at a given kappa.
struct StudyContext {
  std::shared_ptr<const ForwardModel> forward;
  TruthCase truth;
  std::function<NoiseModel(double fraction)> noise;
  std::function<CovarianceOperator(double kappa)> prior;
};

/// Reservoir forward model, sampled truth, build_gamma noise and the
/// spherical prior, all from the setup.
StudyContext reservoir_context(const ExperimentSetup& setup);

struct StudyReport {
  StudyKind kind = StudyKind::noise;
  TruthCase truth;
  std::vector<StudyPoint> points;
};

/// Fresh data for every noise fraction in the sweep, one regularizing run each.
StudyReport run_noise_study(const StudySpec& spec, const StudyContext& context,
                            const ProgressCallback& progress = {});
/// Fixed data; rho from the sweep with tau = 1 / (rho - 1e-3).
StudyReport run_rho_study(const StudySpec& spec, const StudyContext& context,
                          const ProgressCallback& progress = {});
/// Fixed data; prior C = C0 / kappa for kappa in the sweep. Runs the
/// regularizing or the standard scheme according to spec.kind.
StudyReport run_kappa_study(const StudySpec& spec, const StudyContext& context,
                            const ProgressCallback& progress = {});
StudyReport run_study(const StudySpec& spec, const StudyContext& context,
                      const ProgressCallback& progress = {});
/// run_study on reservoir_context(spec.base).
StudyReport run_study(const StudySpec& spec, const ProgressCallback& progress = {});

}  // namespace resinv
