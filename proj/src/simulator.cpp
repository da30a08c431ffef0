#include "resinv/simulator.hpp"

#include "detail/discretization.hpp"
#include "detail/stepping.hpp"
#include "resinv/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace resinv {

using detail::Discretization;
using detail::FluxTerms;
using detail::PressureSystem;
using detail::TransmissibilityTerms;

double rel_perm_water(double s, const PhysicalParams& ph) {
  const double sn = std::clamp((s - ph.s_iw) / (1.0 - ph.s_iw - ph.s_or), 0.0, 1.0);
  return ph.a_w * sn * sn;
}

double rel_perm_oil(double s, const PhysicalParams& ph) {
  const double sn = std::clamp((1.0 - s - ph.s_or) / (1.0 - ph.s_iw - ph.s_or), 0.0, 1.0);
  return ph.a_o * sn * sn;
}

Mobilities mobilities(double s, const PhysicalParams& ph) {
  const double w = rel_perm_water(s, ph) / ph.mu_w;
  return {w, rel_perm_oil(s, ph) / ph.mu_o + w};
}

const char* to_string(ObservationKind kind) noexcept {
  switch (kind) {
    case ObservationKind::bhp:
      return "bhp";
    case ObservationKind::water_rate:
      return "water_rate";
    case ObservationKind::oil_rate:
      return "oil_rate";
  }
  return "unknown";
}

std::vector<ObservationEntry> observation_layout(const ReservoirModel& model) {
  const auto inj = model.injectors();
  const auto prod = model.producers();
  std::vector<ObservationEntry> out;
  out.reserve(static_cast<std::size_t>(model.observation_count()));
  for (std::size_t n = 0; n < model.schedule.report_times.size(); ++n) {
    const double t = model.schedule.report_times[n];
    for (std::size_t w : inj) out.push_back({n, t, w, ObservationKind::bhp});
    for (std::size_t w : prod) out.push_back({n, t, w, ObservationKind::water_rate});
    for (std::size_t w : prod) out.push_back({n, t, w, ObservationKind::oil_rate});
  }
  return out;
}

namespace {

void check_inputs(const Field& u, const ReservoirModel& model) {
  if (!(u.grid() == model.grid)) throw ConfigError("simulate: parameter field grid differs from model grid");
  if (!u.all_finite()) throw NumericalError("simulator", "simulate", "log-permeability has non-finite values");
}

double cfl_number(const Discretization& disc, const FluxTerms& ft, double dt) {
  double worst = 0.0;
  const Vector& pv = disc.pore_volume();
  for (Index i = 0; i < pv.size(); ++i)
    worst = std::max(worst, dt * disc.max_flow_slope() * ft.outflow[i] / pv[i]);
  return worst;
}

}  // namespace

Field solve_pressure(const Field& u, const Field& s, const ReservoirModel& model,
                     std::size_t interval) {
  check_inputs(u, model);
  const Discretization disc(model.grid, model.physics, model.wells);
  const Vector b = disc.sources(interval);
  const TransmissibilityTerms tt = detail::transmissibility_terms(disc, u.values(), s.values());
  PressureSystem ps(disc);
  ps.factorize(tt.trans);
  Vector p = ps.solve(b);
  p.array() += model.physics.p0;
  return Field(model.grid, std::move(p));
}

Field advance_saturation(const Field& u, const Field& p, const Field& s, double dt,
                         const ReservoirModel& model, std::size_t interval) {
  check_inputs(u, model);
  if (!(dt > 0.0)) throw ConfigError("advance_saturation: dt must be positive");
  const Discretization disc(model.grid, model.physics, model.wells);
  const TransmissibilityTerms tt = detail::transmissibility_terms(disc, u.values(), s.values());
  const Vector inj = disc.injection(interval);
  const Vector prod = disc.production(interval);
  const FluxTerms ft = detail::flux_terms(disc, tt, p.values(), s.values(), prod);
  const double cfl = cfl_number(disc, ft, dt);
  if (cfl > 1.0 + 1e-12)
    throw NumericalError("simulator", "advance_saturation",
                         "time step violates the CFL bound (CFL number " + std::to_string(cfl) + ")");
  const Vector r = detail::water_residual(disc, ft, inj, prod);
  const PhysicalParams& ph = model.physics;
  Vector next = s.values() + dt * r.cwiseQuotient(disc.pore_volume());
  next = next.cwiseMax(ph.s_iw).cwiseMin(1.0 - ph.s_or);
  return Field(model.grid, std::move(next));
}

SimulationResult simulate(const Field& u, const ReservoirModel& model, const SimulateOptions& options) {
  check_inputs(u, model);
  const Discretization disc(model.grid, model.physics, model.wells);
  const PhysicalParams& ph = model.physics;
  const Schedule& sched = model.schedule;
  const Index n = disc.cell_count();
  const Vector& pv = disc.pore_volume();
  const double lo = ph.s_iw;
  const double hi = 1.0 - ph.s_or;

  SimulationResult res;
  res.observations.layout = observation_layout(model);
  res.observations.values.resize(static_cast<Index>(res.observations.layout.size()));
  SimulationDiagnostics& diag = res.diagnostics;
  diag.min_saturation = ph.s0;
  diag.max_saturation = ph.s0;

  Vector s = Vector::Constant(n, ph.s0);
  if (options.keep_trajectory) res.saturations.push_back(s);

  PressureSystem ps(disc);
  TransmissibilityTerms tt = detail::transmissibility_terms(disc, u.values(), s);
  ps.factorize(tt.trans);

  auto track_residual = [&](const Vector& p, const Vector& b) {
    const double bn = b.norm();
    if (bn > 0.0) {
      const double r = (PressureSystem::apply(disc, tt.trans, p) - b).norm() / bn;
      diag.max_pressure_residual = std::max(diag.max_pressure_residual, r);
    }
    if (!p.allFinite()) throw NumericalError("simulator", "solve_pressure", "non-finite pressure");
  };

  std::size_t k = 0;
  std::size_t obs_offset = 0;
  double t_start = 0.0;
  for (std::size_t interval = 0; interval < sched.report_times.size(); ++interval) {
    const double t_end = sched.report_times[interval];
    const Vector inj = disc.injection(interval);
    const Vector prod = disc.production(interval);
    const Vector b = disc.sources(interval);
    const double gross_rate = inj.sum() - prod.sum();
    double t = t_start;
    bool last = false;
    while (!last) {
      const Vector p = ps.solve(b);
      track_residual(p, b);
      const FluxTerms ft = detail::flux_terms(disc, tt, p, s, prod);
      const detail::StepChoice step =
          detail::choose_step(disc, ft.outflow, sched.cfl, sched.max_dt, t_end - t);
      const Vector r = detail::water_residual(disc, ft, inj, prod);
      Vector next = s + step.dt * r.cwiseQuotient(pv);

      diag.max_cfl_number = std::max(diag.max_cfl_number, cfl_number(disc, ft, step.dt));
      if (gross_rate > 0.0) {
        const double stored = pv.dot(next - s);
        const double net = step.dt * r.sum();
        diag.max_water_imbalance =
            std::max(diag.max_water_imbalance, std::abs(stored - net) / (step.dt * gross_rate));
      }
      const double below = lo - next.minCoeff();
      const double above = next.maxCoeff() - hi;
      diag.max_clamp_violation = std::max({diag.max_clamp_violation, below, above});
      if (!next.allFinite())
        throw NumericalError("simulator", "advance_saturation",
                             "non-finite saturation at step " + std::to_string(k));
      next = next.cwiseMax(lo).cwiseMin(hi);
      diag.min_saturation = std::min(diag.min_saturation, next.minCoeff());
      diag.max_saturation = std::max(diag.max_saturation, next.maxCoeff());

      last = step.limit == StepLimit::report;
      t = last ? t_end : t + step.dt;
      if (options.keep_trajectory) {
        res.stages.push_back({step.dt, interval, step.limit, step.cell, last});
        res.stage_pressures.push_back(p);
        res.saturations.push_back(next);
      }
      s = std::move(next);
      ++k;
      if (k > detail::max_stage_count)
        throw NumericalError("simulator", "simulate", "time-step count exceeded the safety limit");
      tt = detail::transmissibility_terms(disc, u.values(), s);
      ps.factorize(tt.trans);
    }

    const Vector p = ps.solve(b);
    track_residual(p, b);
    const std::size_t per_report = static_cast<std::size_t>(model.observations_per_report());
    for (std::size_t j = 0; j < per_report; ++j) {
      const ObservationEntry& e = res.observations.layout[obs_offset + j];
      const WellSpec& w = model.wells[e.well];
      const Index c = cell_of(model.grid, w.location);
      const detail::MobilityTerms m = detail::mobility_terms(s[c], ph);
      const double q = w.rate(interval);
      double value = 0.0;
      switch (e.kind) {
        case ObservationKind::bhp:
          value = ph.p0 + p[c] + q / (w.well_index * tt.perm[c] * m.lam_t);
          break;
        case ObservationKind::water_rate:
          value = m.f * std::abs(q);
          break;
        case ObservationKind::oil_rate:
          value = std::abs(q) - m.f * std::abs(q);
          break;
      }
      res.observations.values[static_cast<Index>(obs_offset + j)] = value;
    }
    obs_offset += per_report;
    if (options.keep_trajectory) {
      res.report_pressures.push_back(p);
      res.report_state.push_back(k);
    }
    if (options.keep_reports) {
      Vector pp = p;
      pp.array() += ph.p0;
      res.reports.push_back({Field(model.grid, std::move(pp)), Field(model.grid, s), t_end});
    }
    t_start = t_end;
  }
  if (!res.observations.values.allFinite())
    throw NumericalError("simulator", "simulate", "non-finite observation");
  return res;
}

}  // namespace resinv
