#pragma once

#include "resinv/geostat.hpp"
#include "resinv/sensitivity.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace resinv {

struct RegLMConfig {
  double rho = 0.83;
  double tau = 1.25;
  /// Accept 1 < tau <= 1/rho. The convergence theory needs tau * rho > 1;
  /// the desk cases run with rho = 0.83, tau = 1.2.
  bool allow_small_tau = false;
  /// First trial alpha of the first iteration; trace(DG C DG^T)/trace(Gamma)
  /// when unset.
  std::optional<double> alpha0;
  double alpha_growth = 2.0;
  int max_iterations = 50;
  int max_alpha_trials = 200;

  /// Throws ConfigError unless 0 < rho < 1, tau * rho > 1 (or tau > 1 with
  /// allow_small_tau), growth > 1.
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  Vector u;
  double misfit = 0.0;       // |Gamma^{-1/2}(y - G(u_m))|
  double alpha = 0.0;        // alpha chosen to produce u_{m+1}; NaN on the last record
  int alpha_trials = 0;
  double kappa = 0.0;        // kappa(alpha)
  double kappa_target = 0.0; // rho^2 |Gamma^{-1/2}(y - G(u_m))|^2
  double rel_error = 0.0;    // |u_m - truth| / |truth|; NaN without a truth
  double iterate_change = 0.0;  // |u_m - u_{m-1}| / |u_m|
  double seconds = 0.0;      // wall time spent producing this record
};

enum class StopReason { discrepancy, max_iterations };

const char* to_string(StopReason reason) noexcept;

struct RegLMResult {
  Vector u;
  std::vector<IterationRecord> records;
  StopReason reason = StopReason::max_iterations;
  bool converged() const noexcept { return reason == StopReason::discrepancy; }
};

/// Symmetric positive definite data covariance Gamma = L L^T with cached
/// Cholesky factor. Linear algebra on mixed-unit data is done in whitened
/// coordinates L^{-1} r.
class DataCovariance {
 public:
  explicit DataCovariance(Matrix gamma);
  static DataCovariance diagonal(const Vector& variances);

  const Matrix& matrix() const noexcept { return gamma_; }
  Index size() const noexcept { return gamma_.rows(); }
  /// |L^{-1} r| = |Gamma^{-1/2} r|
  double whitened_norm(const Vector& r) const;
  /// Gamma^{-1} r
  Vector solve(const Vector& r) const;
  /// L^{-1} r
  Vector whiten(const Vector& r) const;
  /// L^{-T} z
  Vector whiten_transpose_solve(const Vector& z) const;
  /// L^{-1} B L^{-T}, symmetrized.
  Matrix whiten_symmetric(const Matrix& b) const;

 private:
  Matrix gamma_;
  Eigen::LLT<Matrix> llt_;
};

/// Solves (B_w + shift I) z = r for symmetric positive semi-definite B_w.
/// Throws NumericalError from `module::operation` when the shifted matrix is
/// singular to working precision.
Vector shifted_solve(const Matrix& b_white, double shift, const Vector& r, const char* module,
                     const char* operation);

/// alpha^2 |Gamma^{1/2} (B + alpha Gamma)^{-1} d|^2 with B = DG C DG^T,
/// evaluated as alpha^2 |(L^{-1} B L^{-T} + alpha I)^{-1} L^{-1} d|^2.
double kappa_eval(double alpha, const Matrix& dg_c_dgt, const DataCovariance& gamma, const Vector& d);

struct AlphaChoice {
  double alpha;
  int trials;
  double kappa;
  double target;  // rho^2 |Gamma^{-1/2} d|^2
};

/// First alpha in alpha_start * growth^j with kappa(alpha) >= rho^2 |Gamma^{-1/2} d|^2.
AlphaChoice select_alpha(const RegLMConfig& config, double alpha_start, const Matrix& dg_c_dgt,
                         const DataCovariance& gamma, const Vector& d);

/// C DG^T (DG C DG^T + alpha Gamma)^{-1} d
Vector reg_lm_increment(const SensitivityProducts& products, const DataCovariance& gamma,
                        const Vector& d, double alpha);

/// u_m + C DG^T (DG C DG^T + alpha Gamma)^{-1} (y - G(u_m))
Vector reg_lm_step(const Vector& u_m, const Vector& y, const Vector& g_um, const SensitivityOperator& s,
                   const CovarianceOperator& c, const DataCovariance& gamma, double alpha);

struct InversionProblem {
  const ForwardModel& model;
  const CovarianceOperator& prior;
  const DataCovariance& gamma;
  Vector y;
  Vector u0;                     // prior mean, also the initial iterate
  std::optional<Vector> truth;   // enables the truth-relative error
};

using ProgressCallback = std::function<void(const std::string&)>;

/// Iterates until the discrepancy principle |Gamma^{-1/2}(y - G(u_m))| <= tau * eta
/// holds or max_iterations updates were made.
RegLMResult run_reg_lm(const InversionProblem& problem, double eta, const RegLMConfig& config,
                       const ProgressCallback& progress = {});

}  // namespace resinv
