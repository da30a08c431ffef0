#pragma once

#include "resinv/reg_lm.hpp"

#include <optional>
#include <vector>

namespace resinv {

struct StdLMConfig {
  /// Initial damping; J(u0)/N_d when unset.
  std::optional<double> lambda0;
  double eps0 = 1e-4;  // bound on |J_{m+1} - J_m| / J_{m+1}
  double eps1 = 1e-3;  // bound on |u_{m+1} - u_m| / |u_{m+1}|
  int max_iterations = 50;
  double lambda_floor = 1e-12;
  double lambda_cap = 1e10;
  /// Keep steps that increase J instead of rejecting them.
  bool accept_uphill = false;

  void validate() const;
};

struct StdLMRecord {
  int iteration = 0;
  Vector u;                  // current iterate after this iteration's decision
  double objective = 0.0;    // J(u)
  double misfit = 0.0;       // |Gamma^{-1/2}(y - G(u))|
  double lambda = 0.0;       // damping used to compute this iteration's trial step
  double stop_metric_j = 0.0;
  double stop_metric_u = 0.0;
  bool accepted = true;
  double rel_error = 0.0;
  double seconds = 0.0;
};

struct StdLMResult {
  Vector u;
  std::vector<StdLMRecord> records;
  bool converged = false;
};

/// 1/2 |Gamma^{-1/2}(y - G(u))|^2 + 1/2 |C^{-1/2}(u - ubar)|^2
double objective_J(const Vector& u, const Vector& y, const Vector& g_u, const DataCovariance& gamma,
                   const CovarianceOperator& c, const Vector& ubar);

/// Minimiser of the linearized objective with damping lambda:
///   [DG^T Gamma^{-1} DG + (1 + lambda) C^{-1}] du = DG^T Gamma^{-1}(y - G) - C^{-1}(u_m - ubar),
/// computed in the data-space form
///   du = C DG^T [DG C DG^T + b Gamma]^{-1} [y - G + DG(u_m - ubar)/b] - (u_m - ubar)/b,  b = 1 + lambda.
/// Returns u_m + du.
Vector std_lm_step(const Vector& u_m, const Vector& ubar, const Vector& y, const Vector& g_um,
                   const SensitivityOperator& s, const CovarianceOperator& c, const DataCovariance& gamma,
                   double lambda);

Vector std_lm_increment(const Vector& u_m, const Vector& ubar, const Vector& d,
                        const SensitivityOperator& s, const SensitivityProducts& products,
                        const DataCovariance& gamma, double lambda);

/// lambda / 10 if J_new < J_old, else 10 lambda, clamped to [floor, cap].
double lambda_schedule(double lambda, double j_new, double j_old, double floor = 1e-12,
                       double cap = 1e10);

StdLMResult run_std_lm(const InversionProblem& problem, const StdLMConfig& config,
                       const ProgressCallback& progress = {});

}  // namespace resinv
