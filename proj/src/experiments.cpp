#include "resinv/experiments.hpp"

#include "resinv/error.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace resinv {

std::vector<WellSpec> standard_well_layout(const Grid& grid, double injector_rate, double well_radius,
                                           double equivalent_radius_factor) {
  if (!(injector_rate > 0.0)) throw ConfigError("well layout: injector rate must be positive");
  const double wi = peaceman_geometric_index(grid, well_radius, equivalent_radius_factor);
  std::vector<WellSpec> wells;
  const double producer_rate = -4.0 * injector_rate / 9.0;
  int k = 1;
  for (double fy : {0.25, 0.5, 0.75})
    for (double fx : {0.25, 0.5, 0.75})
      wells.push_back({"P" + std::to_string(k++), WellKind::producer,
                       {fx * grid.lx(), fy * grid.ly()}, {producer_rate}, wi});
  k = 1;
  for (double fy : {0.375, 0.625})
    for (double fx : {0.375, 0.625})
      wells.push_back({"I" + std::to_string(k++), WellKind::injector,
                       {fx * grid.lx(), fy * grid.ly()}, {injector_rate}, wi});
  return wells;
}

ReservoirModel desk_case(const DeskCaseOptions& o) {
  const Grid grid(o.n, o.n, o.length, o.length, o.thickness);
  PhysicalParams physics;
  physics.porosity = Vector::Constant(grid.cell_count(), o.porosity);
  ReservoirModel model{grid, physics, standard_well_layout(grid, o.injector_rate),
                       uniform_schedule(o.total_time, o.report_count, o.max_dt, o.cfl)};
  model.validate();
  return model;
}

CovarianceOperator build_prior(const Grid& grid, const PriorSpec& prior, double kappa) {
  const double range = prior.range.value_or(0.25 * std::max(grid.lx(), grid.ly()));
  return build_covariance(grid, range, prior.angle, prior.axis_ratio, kappa);
}

RegLMConfig desk_reg_config() {
  RegLMConfig config;
  config.rho = 0.83;
  config.tau = 1.2;
  config.allow_small_tau = true;
  return config;
}

DataCovariance NoiseModel::covariance() const {
  return DataCovariance::diagonal(sigma.array().square().matrix());
}

NoiseModel build_gamma(const ObservationVector& clean, const ReservoirModel& model, double fraction,
                       std::uint64_t seed) {
  if (!(fraction > 0.0)) throw ConfigError("build_gamma: noise fraction must be positive");
  if (clean.layout.size() != static_cast<std::size_t>(clean.values.size()))
    throw ConfigError("build_gamma: observation layout does not match the values");
  NoiseModel noise{fraction, Vector(clean.size()), seed};
  for (Index i = 0; i < clean.size(); ++i) {
    const ObservationEntry& e = clean.layout[static_cast<std::size_t>(i)];
    double nominal = 0.0;
    if (e.kind == ObservationKind::bhp) {
      nominal = std::abs(clean.values[i]);
    } else {
      nominal = std::abs(model.wells.at(e.well).rate(e.report));
      if (!(nominal > 0.0))
        throw ConfigError("build_gamma: producer " + model.wells[e.well].name +
                          " has zero total rate, so its rate noise would vanish");
    }
    noise.sigma[i] = fraction * nominal;
    if (!(noise.sigma[i] > 0.0))
      throw ConfigError("build_gamma: observation " + std::to_string(i) + " has zero nominal value");
  }
  return noise;
}

SyntheticData synthesize_data(const Vector& clean, const NoiseModel& noise) {
  if (clean.size() != noise.sigma.size()) throw ConfigError("synthesize_data: noise model has the wrong size");
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(clean.size());
  for (Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return {clean, clean + noise.sigma.cwiseProduct(z), z.norm()};
}

SyntheticData synthesize_data(const ForwardModel& model, const Vector& truth, const NoiseModel& noise) {
  return synthesize_data(model.evaluate(truth), noise);
}

TruthCase make_truth(const ExperimentSetup& setup) {
  const Grid& grid = setup.model.grid;
  const Vector mean = Vector::Constant(grid.cell_count(), setup.prior.mean);
  const CovarianceOperator c0 = build_prior(grid, setup.prior, 1.0);
  const Field truth = sample_field(c0, Field(grid, mean), setup.truth_seed);
  SimulationResult run = simulate(truth, setup.model, {false, false});
  return {truth.values(), mean, std::move(run.observations)};
}

StudyContext reservoir_context(const ExperimentSetup& setup) {
  setup.model.validate();
  auto forward = std::make_shared<const ReservoirForwardModel>(setup.model, setup.method, setup.fd_step,
                                                               setup.threads);
  TruthCase truth = make_truth(setup);
  auto noise = [clean = truth.clean, model = setup.model, seed = setup.noise_seed](double f) {
    return build_gamma(clean, model, f, seed);
  };
  auto prior = [grid = setup.model.grid, spec = setup.prior](double kappa) {
    return build_prior(grid, spec, kappa);
  };
  return {std::move(forward), std::move(truth), noise, prior};
}

const char* to_string(StudyKind kind) noexcept {
  switch (kind) {
    case StudyKind::noise: return "noise";
    case StudyKind::rho_tau: return "rho_tau";
    case StudyKind::kappa_reglm: return "kappa_reglm";
    case StudyKind::kappa_stdlm: return "kappa_stdlm";
  }
  return "unknown";
}

StudyKind study_kind_from_string(const std::string& name) {
  for (StudyKind k : {StudyKind::noise, StudyKind::rho_tau, StudyKind::kappa_reglm, StudyKind::kappa_stdlm})
    if (name == to_string(k)) return k;
  throw ConfigError("unknown study kind '" + name + "' (expected noise, rho_tau, kappa_reglm or kappa_stdlm)");
}

void StudySpec::validate() const {
  if (sweep.empty()) throw ConfigError("study: sweep is empty");
  for (double v : sweep)
    if (!(v > 0.0)) throw ConfigError("study: sweep values must be positive");
  if (kind == StudyKind::rho_tau)
    for (double v : sweep)
      if (!(v > 1e-3 && v < 1.0)) throw ConfigError("study: rho values must lie in (0.001, 1)");
  if (!(base.noise_fraction > 0.0)) throw ConfigError("study: noise fraction must be positive");
  if (!(base.kappa > 0.0)) throw ConfigError("study: kappa must be positive");
  base.model.validate();
}

namespace {

class Session {
 public:
  Session(const StudySpec& spec, const StudyContext& context, const ProgressCallback& progress)
      : spec_(spec), ctx_(context), progress_(progress) {
    spec.validate();
    if (!ctx_.forward || !ctx_.noise || !ctx_.prior) throw ConfigError("study: incomplete study context");
    if (ctx_.truth.truth.size() != ctx_.forward->parameter_size() ||
        ctx_.truth.clean.values.size() != ctx_.forward->observation_size())
      throw ConfigError("study: truth does not match the forward model");
  }

  StudyReport report() const { return {spec_.kind, ctx_.truth, {}}; }

  StudyPoint run_reg(double value, double fraction, double kappa, const RegLMConfig& config) const {
    const Inputs in = inputs(fraction, kappa);
    const InversionProblem problem{*ctx_.forward, in.prior, in.gamma, in.data.y, ctx_.truth.prior_mean,
                                   ctx_.truth.truth};
    StudyPoint pt = start(value, fraction, kappa, in.data.eta);
    pt.rho = config.rho;
    pt.tau = config.tau;
    pt.reg = run_reg_lm(problem, in.data.eta, config, progress_);
    pt.final_u = pt.reg->u;
    pt.final_misfit = pt.reg->records.back().misfit;
    pt.iterations = static_cast<int>(pt.reg->records.size()) - 1;
    pt.converged = pt.reg->converged();
    finish(pt);
    return pt;
  }

  StudyPoint run_std(double value, double fraction, double kappa) const {
    const Inputs in = inputs(fraction, kappa);
    const InversionProblem problem{*ctx_.forward, in.prior, in.gamma, in.data.y, ctx_.truth.prior_mean,
                                   ctx_.truth.truth};
    StudyPoint pt = start(value, fraction, kappa, in.data.eta);
    pt.std_lm = run_std_lm(problem, spec_.base.std_lm, progress_);
    pt.final_u = pt.std_lm->u;
    pt.final_misfit = pt.std_lm->records.back().misfit;
    pt.iterations = static_cast<int>(pt.std_lm->records.size()) - 1;
    pt.converged = pt.std_lm->converged;
    finish(pt);
    return pt;
  }

 private:
  struct Inputs {
    SyntheticData data;
    DataCovariance gamma;
    CovarianceOperator prior;
  };

  Inputs inputs(double fraction, double kappa) const {
    const NoiseModel noise = ctx_.noise(fraction);
    return {synthesize_data(ctx_.truth.clean.values, noise), noise.covariance(), ctx_.prior(kappa)};
  }

  StudyPoint start(double value, double fraction, double kappa, double eta) const {
    StudyPoint pt;
    pt.value = value;
    pt.fraction = fraction;
    pt.kappa = kappa;
    pt.eta = eta;
    return pt;
  }

  double rel_error(const Vector& u) const {
    return (u - ctx_.truth.truth).norm() / ctx_.truth.truth.norm();
  }

  void finish(StudyPoint& pt) const {
    pt.final_rel_error = rel_error(pt.final_u);
    pt.prior_rel_error = rel_error(ctx_.truth.prior_mean);
    pt.forecast = ctx_.forward->evaluate(pt.final_u);
    if (progress_) {
      std::ostringstream msg;
      msg << to_string(spec_.kind) << " point " << pt.value << ": " << pt.iterations
          << " iterations, rel error " << pt.final_rel_error << (pt.converged ? "" : " (not converged)");
      progress_(msg.str());
    }
  }

  const StudySpec& spec_;
  const StudyContext& ctx_;
  const ProgressCallback& progress_;
};

}  // namespace

StudyReport run_noise_study(const StudySpec& spec, const StudyContext& context,
                            const ProgressCallback& progress) {
  const Session session(spec, context, progress);
  StudyReport report = session.report();
  for (double f : spec.sweep) report.points.push_back(session.run_reg(f, f, spec.base.kappa, spec.base.reg));
  return report;
}

StudyReport run_rho_study(const StudySpec& spec, const StudyContext& context,
                          const ProgressCallback& progress) {
  const Session session(spec, context, progress);
  StudyReport report = session.report();
  for (double rho : spec.sweep) {
    RegLMConfig config = spec.base.reg;
    config.rho = rho;
    config.tau = 1.0 / (rho - 1e-3);
    report.points.push_back(session.run_reg(rho, spec.base.noise_fraction, spec.base.kappa, config));
  }
  return report;
}

StudyReport run_kappa_study(const StudySpec& spec, const StudyContext& context,
                            const ProgressCallback& progress) {
  if (spec.kind != StudyKind::kappa_reglm && spec.kind != StudyKind::kappa_stdlm)
    throw ConfigError("run_kappa_study: study kind must be kappa_reglm or kappa_stdlm");
  const Session session(spec, context, progress);
  StudyReport report = session.report();
  for (double kappa : spec.sweep) {
    report.points.push_back(spec.kind == StudyKind::kappa_reglm
                                ? session.run_reg(kappa, spec.base.noise_fraction, kappa, spec.base.reg)
                                : session.run_std(kappa, spec.base.noise_fraction, kappa));
  }
  return report;
}

StudyReport run_study(const StudySpec& spec, const StudyContext& context, const ProgressCallback& progress) {
  switch (spec.kind) {
    case StudyKind::noise: return run_noise_study(spec, context, progress);
    case StudyKind::rho_tau: return run_rho_study(spec, context, progress);
    case StudyKind::kappa_reglm:
    case StudyKind::kappa_stdlm: return run_kappa_study(spec, context, progress);
  }
  throw ConfigError("run_study: unknown study kind");
}

StudyReport run_study(const StudySpec& spec, const ProgressCallback& progress) {
  spec.validate();
  return run_study(spec, reservoir_context(spec.base), progress);
}

}  // namespace resinv
