#include "resinv/reg_lm.hpp"

#include "resinv/error.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace resinv {

void RegLMConfig::validate() const {
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("reg_lm: rho must lie in (0,1)");
  if (allow_small_tau ? !(tau > 1.0) : !(tau * rho > 1.0))
    throw ConfigError(allow_small_tau ? "reg_lm: tau must exceed 1" : "reg_lm: tau must exceed 1/rho");
  if (alpha0 && !(*alpha0 > 0.0)) throw ConfigError("reg_lm: alpha0 must be positive");
  if (!(alpha_growth > 1.0)) throw ConfigError("reg_lm: alpha growth must exceed 1");
  if (max_iterations < 0) throw ConfigError("reg_lm: max_iterations must be non-negative");
  if (max_alpha_trials < 1) throw ConfigError("reg_lm: max_alpha_trials must be positive");
}

const char* to_string(StopReason reason) noexcept {
  return reason == StopReason::discrepancy ? "discrepancy" : "max_iterations";
}

DataCovariance::DataCovariance(Matrix gamma) : gamma_(std::move(gamma)) {
  if (gamma_.rows() != gamma_.cols() || gamma_.rows() == 0)
    throw ConfigError("data covariance must be square and non-empty");
  if (!gamma_.allFinite() || !gamma_.isApprox(gamma_.transpose(), 1e-12))
    throw ConfigError("data covariance must be finite and symmetric");
  llt_.compute(gamma_);
  if (llt_.info() != Eigen::Success || !(llt_.matrixLLT().diagonal().minCoeff() > 0.0))
    throw NumericalError("reg_lm", "data_covariance", "Gamma is not positive definite");
}

DataCovariance DataCovariance::diagonal(const Vector& variances) {
  return DataCovariance(Matrix(variances.asDiagonal()));
}

Vector DataCovariance::solve(const Vector& r) const {
  if (r.size() != size()) throw ConfigError("data covariance: dimension mismatch");
  return llt_.solve(r);
}

Vector DataCovariance::whiten(const Vector& r) const {
  if (r.size() != size()) throw ConfigError("data covariance: dimension mismatch");
  return llt_.matrixL().solve(r);
}

Vector DataCovariance::whiten_transpose_solve(const Vector& z) const {
  if (z.size() != size()) throw ConfigError("data covariance: dimension mismatch");
  return llt_.matrixU().solve(z);
}

Matrix DataCovariance::whiten_symmetric(const Matrix& b) const {
  if (b.rows() != size() || b.cols() != size()) throw ConfigError("data covariance: dimension mismatch");
  Matrix left = llt_.matrixL().solve(b);
  Matrix both = llt_.matrixL().solve(left.transpose());
  return 0.5 * (both + both.transpose());
}

double DataCovariance::whitened_norm(const Vector& r) const { return whiten(r).norm(); }

Vector shifted_solve(const Matrix& b_white, double shift, const Vector& r, const char* module,
                     const char* operation) {
  Matrix a = b_white;
  a.diagonal().array() += shift;
  Eigen::LDLT<Matrix> f(a);
  const Vector d = f.vectorD();
  const double scale = d.cwiseAbs().maxCoeff();
  if (f.info() != Eigen::Success || !(scale > 0.0) || !(d.minCoeff() > 1e-14 * scale))
    throw NumericalError(module, operation, "augmented system DG C DG^T + shift * Gamma is singular");
  return f.solve(r);
}

namespace {

/// Eigenpairs of the whitened B with the squared projections of the whitened
/// residual, so kappa(alpha) = sum_i w_i / (1 + lambda_i / alpha)^2. Each term
/// is non-decreasing in alpha under rounding, and so is the sum.
struct KappaSpectrum {
  Vector lambda;
  Vector weight;
};

KappaSpectrum kappa_spectrum(const Matrix& b_white, const Vector& d_white) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(b_white);
  if (eig.info() != Eigen::Success)
    throw NumericalError("reg_lm", "kappa_eval", "eigen decomposition of DG C DG^T failed");
  return {eig.eigenvalues().cwiseMax(0.0), (eig.eigenvectors().transpose() * d_white).array().square().matrix()};
}

double kappa_at(double alpha, const KappaSpectrum& sp) {
  if (alpha == 0.0) {
    const double top = sp.lambda.size() ? sp.lambda.maxCoeff() : 0.0;
    if (!(top > 0.0) || !(sp.lambda.minCoeff() > 1e-14 * top))
      throw NumericalError("reg_lm", "kappa_eval", "augmented system DG C DG^T + shift * Gamma is singular");
    return 0.0;
  }
  double k = 0.0;
  for (Index i = 0; i < sp.lambda.size(); ++i) {
    const double f = 1.0 + sp.lambda[i] / alpha;
    k += sp.weight[i] / (f * f);
  }
  return k;
}

}  // namespace

double kappa_eval(double alpha, const Matrix& dg_c_dgt, const DataCovariance& gamma, const Vector& d) {
  if (!(alpha >= 0.0)) throw ConfigError("kappa_eval: alpha must be non-negative");
  if (d.size() != gamma.size()) throw ConfigError("kappa_eval: dimension mismatch");
  return kappa_at(alpha, kappa_spectrum(gamma.whiten_symmetric(dg_c_dgt), gamma.whiten(d)));
}

AlphaChoice select_alpha(const RegLMConfig& config, double alpha_start, const Matrix& dg_c_dgt,
                         const DataCovariance& gamma, const Vector& d) {
  if (!(alpha_start > 0.0)) throw ConfigError("select_alpha: starting alpha must be positive");
  const double wn = gamma.whitened_norm(d);
  if (!(wn > 0.0)) throw ConfigError("select_alpha: residual is zero");
  const double target = config.rho * config.rho * wn * wn;
  const KappaSpectrum sp = kappa_spectrum(gamma.whiten_symmetric(dg_c_dgt), gamma.whiten(d));
  double alpha = alpha_start;
  for (int trial = 1; trial <= config.max_alpha_trials; ++trial) {
    const double k = kappa_at(alpha, sp);
    if (k >= target) return {alpha, trial, k, target};
    alpha *= config.alpha_growth;
  }
  std::ostringstream msg;
  msg << "no alpha in " << config.max_alpha_trials << " trials from " << alpha_start
      << " reached the required kappa; check alpha0 and the growth factor";
  throw NumericalError("reg_lm", "select_alpha", msg.str());
}

Vector reg_lm_increment(const SensitivityProducts& products, const DataCovariance& gamma,
                        const Vector& d, double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("reg_lm_step: alpha must be positive");
  const Vector z =
      shifted_solve(gamma.whiten_symmetric(products.dg_c_dgt), alpha, gamma.whiten(d), "reg_lm", "reg_lm_step");
  return products.c_dgt * gamma.whiten_transpose_solve(z);
}

Vector reg_lm_step(const Vector& u_m, const Vector& y, const Vector& g_um, const SensitivityOperator& s,
                   const CovarianceOperator& c, const DataCovariance& gamma, double alpha) {
  if (y.size() != g_um.size() || u_m.size() != s.cols())
    throw ConfigError("reg_lm_step: dimension mismatch");
  return u_m + reg_lm_increment(assemble_products(s, c), gamma, y - g_um, alpha);
}

RegLMResult run_reg_lm(const InversionProblem& problem, double eta, const RegLMConfig& config,
                       const ProgressCallback& progress) {
  config.validate();
  if (!(eta > 0.0)) throw ConfigError("run_reg_lm: noise level eta must be positive");
  const ForwardModel& model = problem.model;
  if (problem.y.size() != model.observation_size() || problem.u0.size() != model.parameter_size())
    throw ConfigError("run_reg_lm: data or initial guess has the wrong length");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  using clock = std::chrono::steady_clock;

  RegLMResult result;
  Vector u = problem.u0;
  Vector previous = u;
  double last_alpha = 0.0;
  auto start = clock::now();
  Vector g = model.evaluate(u);

  for (int m = 0;; ++m) {
    IterationRecord rec;
    rec.iteration = m;
    rec.u = u;
    const Vector d = problem.y - g;
    rec.misfit = problem.gamma.whitened_norm(d);
    rec.rel_error = problem.truth ? (u - *problem.truth).norm() / problem.truth->norm() : nan;
    rec.iterate_change = m == 0 ? 0.0 : (u - previous).norm() / u.norm();
    rec.alpha = nan;
    rec.kappa = nan;
    rec.kappa_target = config.rho * config.rho * rec.misfit * rec.misfit;

    const bool stop = rec.misfit <= config.tau * eta;
    if (stop || m == config.max_iterations) {
      result.reason = stop ? StopReason::discrepancy : StopReason::max_iterations;
      rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
      result.records.push_back(std::move(rec));
      break;
    }

    const Linearization lin = model.linearize(u);
    const SensitivityProducts prod = assemble_products(lin.sensitivity, problem.prior);
    const double alpha_start =
        m == 0 ? config.alpha0.value_or(prod.dg_c_dgt.trace() / problem.gamma.matrix().trace())
               : last_alpha / (config.alpha_growth * config.alpha_growth);
    const AlphaChoice choice = select_alpha(config, alpha_start, prod.dg_c_dgt, problem.gamma, d);
    if (!(choice.kappa >= choice.target))
      throw NumericalError("reg_lm", "run_reg_lm", "selected alpha violates the kappa condition");
    rec.alpha = choice.alpha;
    rec.alpha_trials = choice.trials;
    rec.kappa = choice.kappa;
    last_alpha = choice.alpha;

    previous = u;
    u = u + reg_lm_increment(prod, problem.gamma, d, choice.alpha);
    if (!u.allFinite()) throw NumericalError("reg_lm", "run_reg_lm", "iterate became non-finite");
    g = model.evaluate(u);
    rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
    start = clock::now();
    if (progress) {
      std::ostringstream msg;
      msg << "reg-lm iteration " << m << ": misfit " << rec.misfit << ", alpha " << rec.alpha
          << " (" << rec.alpha_trials << " trials)";
      progress(msg.str());
    }
    result.records.push_back(std::move(rec));
  }
  result.u = u;
  return result;
}

}  // namespace resinv
