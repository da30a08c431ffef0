#pragma once

#include "resinv/experiments.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace resinv {

/// m^3/s to bbl/day.
inline constexpr double bbl_per_day_per_m3s = 543439.65;

/// Shortest round-trip decimal form ("nan" and "inf" for non-finite values).
std::string format_number(double v);

/// Field CSV: a "nx,ny,lx,ly" header row with its values, then an
/// "ix,iy,x,y,value" table in row-major cell order.
void write_field_csv(const std::filesystem::path& path, const Field& field);
Field read_field_csv(const std::filesystem::path& path);

/// Observation CSV with columns time,well,kind,value,unit. Rates are written
/// in bbl/day, pressures in Pa; `sigma`, when given, adds a column in the
/// same units.
void write_observations_csv(const std::filesystem::path& path, const ObservationVector& obs,
                            const ReservoirModel& model, const Vector* sigma = nullptr);

struct ObservationTable {
  ObservationVector observations;  // SI units
  Vector sigma;                    // empty when the file has no sigma column
};

/// Reads a file written by write_observations_csv and checks that its rows
/// match the layout of `model`.
ObservationTable read_observations_csv(const std::filesystem::path& path, const ReservoirModel& model);

/// name,kind,x,y,cell,rate (rate of the first interval, m^3/s).
void write_wells_csv(const std::filesystem::path& path, const ReservoirModel& model);

/// iteration,misfit,alpha,trials,kappa,kappa_target,rel_error,iterate_change
void write_reg_iterations_csv(const std::filesystem::path& path, const RegLMResult& result);
/// iteration,J,misfit,lambda,stop_metric_J,stop_metric_u,accepted,rel_error
void write_std_iterations_csv(const std::filesystem::path& path, const StdLMResult& result);
/// iteration,seconds (kept apart so the other outputs are reproducible byte for byte).
void write_timing_csv(const std::filesystem::path& path, const std::vector<double>& seconds);

/// value,fraction,kappa,rho,tau,eta,iterations,converged,final_misfit,final_rel_error,prior_rel_error
void write_study_summary_csv(const std::filesystem::path& path, const StudyReport& report);

}  // namespace resinv
