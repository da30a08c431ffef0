#include "resinv/std_lm.hpp"

#include "resinv/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace resinv {

void StdLMConfig::validate() const {
  if (lambda0 && !(*lambda0 > 0.0)) throw ConfigError("std_lm: lambda0 must be positive");
  if (!(eps0 > 0.0) || !(eps1 > 0.0)) throw ConfigError("std_lm: eps0 and eps1 must be positive");
  if (max_iterations < 0) throw ConfigError("std_lm: max_iterations must be non-negative");
  if (!(lambda_floor >= 0.0) || !(lambda_cap >= lambda_floor))
    throw ConfigError("std_lm: need 0 <= lambda_floor <= lambda_cap");
}

double objective_J(const Vector& u, const Vector& y, const Vector& g_u, const DataCovariance& gamma,
                   const CovarianceOperator& c, const Vector& ubar) {
  if (y.size() != g_u.size() || u.size() != ubar.size()) throw ConfigError("objective_J: dimension mismatch");
  const double data = gamma.whitened_norm(y - g_u);
  return 0.5 * data * data + 0.5 * c.inverse_norm_squared(u - ubar);
}

Vector std_lm_increment(const Vector& u_m, const Vector& ubar, const Vector& d,
                        const SensitivityOperator& s, const SensitivityProducts& products,
                        const DataCovariance& gamma, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("std_lm_step: lambda must be non-negative");
  const double b = 1.0 + lambda;
  const Vector v = u_m - ubar;
  const Vector z = shifted_solve(gamma.whiten_symmetric(products.dg_c_dgt), b, gamma.whiten(d + s.apply(v) / b),
                                 "std_lm", "std_lm_step");
  return products.c_dgt * gamma.whiten_transpose_solve(z) - v / b;
}

Vector std_lm_step(const Vector& u_m, const Vector& ubar, const Vector& y, const Vector& g_um,
                   const SensitivityOperator& s, const CovarianceOperator& c, const DataCovariance& gamma,
                   double lambda) {
  if (y.size() != g_um.size() || u_m.size() != s.cols()) throw ConfigError("std_lm_step: dimension mismatch");
  return u_m + std_lm_increment(u_m, ubar, y - g_um, s, assemble_products(s, c), gamma, lambda);
}

double lambda_schedule(double lambda, double j_new, double j_old, double floor, double cap) {
  const double next = j_new < j_old ? lambda / 10.0 : lambda * 10.0;
  return std::clamp(next, floor, cap);
}

StdLMResult run_std_lm(const InversionProblem& problem, const StdLMConfig& config,
                       const ProgressCallback& progress) {
  config.validate();
  const ForwardModel& model = problem.model;
  if (problem.y.size() != model.observation_size() || problem.u0.size() != model.parameter_size())
    throw ConfigError("run_std_lm: data or initial guess has the wrong length");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  using clock = std::chrono::steady_clock;
  const Vector& ubar = problem.u0;

  auto rel_error = [&](const Vector& u) {
    return problem.truth ? (u - *problem.truth).norm() / problem.truth->norm() : nan;
  };

  StdLMResult result;
  auto start = clock::now();
  Vector u = problem.u0;
  Vector g = model.evaluate(u);
  double j = objective_J(u, problem.y, g, problem.gamma, problem.prior, ubar);
  double lambda = config.lambda0.value_or(j / static_cast<double>(problem.y.size()));
  lambda = std::clamp(lambda, config.lambda_floor, config.lambda_cap);
  if (!(lambda > 0.0)) lambda = std::max(config.lambda_floor, 1e-12);

  {
    StdLMRecord rec;
    rec.u = u;
    rec.objective = j;
    rec.misfit = problem.gamma.whitened_norm(problem.y - g);
    rec.lambda = nan;
    rec.stop_metric_j = nan;
    rec.stop_metric_u = nan;
    rec.rel_error = rel_error(u);
    rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
    result.records.push_back(std::move(rec));
  }

  std::optional<Linearization> lin;
  std::optional<SensitivityProducts> prod;
  for (int m = 1; m <= config.max_iterations; ++m) {
    start = clock::now();
    if (!lin) {
      lin.emplace(model.linearize(u));
      prod.emplace(assemble_products(lin->sensitivity, problem.prior));
    }
    const Vector trial =
        u + std_lm_increment(u, ubar, problem.y - g, lin->sensitivity, *prod, problem.gamma, lambda);
    if (!trial.allFinite()) throw NumericalError("std_lm", "run_std_lm", "trial iterate became non-finite");
    const Vector g_trial = model.evaluate(trial);
    const double j_trial = objective_J(trial, problem.y, g_trial, problem.gamma, problem.prior, ubar);

    StdLMRecord rec;
    rec.iteration = m;
    rec.lambda = lambda;
    const double dj = std::abs(j_trial - j);
    rec.stop_metric_j = dj == 0.0 ? 0.0 : dj / j_trial;
    const double du = (trial - u).norm();
    rec.stop_metric_u = du == 0.0 ? 0.0 : du / trial.norm();
    rec.accepted = !(j_trial > j) || config.accept_uphill;
    const double next_lambda = lambda_schedule(lambda, j_trial, j, config.lambda_floor, config.lambda_cap);
    if (rec.accepted) {
      u = trial;
      g = g_trial;
      j = j_trial;
      lin.reset();
    }
    rec.u = u;
    rec.objective = j;
    rec.misfit = problem.gamma.whitened_norm(problem.y - g);
    rec.rel_error = rel_error(u);
    rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
    const bool done = rec.accepted && rec.stop_metric_j <= config.eps0 && rec.stop_metric_u <= config.eps1;
    if (progress) {
      std::ostringstream msg;
      msg << "std-lm iteration " << m << ": J " << rec.objective << ", lambda " << rec.lambda
          << (rec.accepted ? "" : " (rejected)");
      progress(msg.str());
    }
    result.records.push_back(std::move(rec));
    lambda = next_lambda;
    if (done) {
      result.converged = true;
      break;
    }
  }
  result.u = u;
  return result;
}

}  // namespace resinv
