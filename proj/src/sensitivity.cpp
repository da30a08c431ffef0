#include "resinv/sensitivity.hpp"

#include "detail/discretization.hpp"
#include "resinv/error.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace resinv {

using detail::Discretization;
using detail::FluxTerms;
using detail::PressureSystem;
using detail::RowMatrix;
using detail::TransmissibilityTerms;

const char* to_string(SensitivityMethod method) noexcept {
  switch (method) {
    case SensitivityMethod::adjoint:
      return "adjoint";
    case SensitivityMethod::finite_difference:
      return "finite-difference";
    case SensitivityMethod::exact:
      return "exact";
  }
  return "unknown";
}

SensitivityOperator::SensitivityOperator(Vector base, Matrix jacobian, SensitivityMethod method)
    : base_(std::move(base)), jacobian_(std::move(jacobian)), method_(method) {
  if (base_.size() != jacobian_.cols())
    throw ConfigError("sensitivity: base point length does not match Jacobian columns");
  if (!jacobian_.allFinite())
    throw NumericalError("sensitivity", "assemble", "Jacobian has non-finite entries");
}

Vector SensitivityOperator::apply(const Vector& v) const {
  if (v.size() != cols()) throw ConfigError("sensitivity: dimension mismatch in DG v");
  return jacobian_ * v;
}

Vector SensitivityOperator::apply_adjoint(const Vector& w) const {
  if (w.size() != rows()) throw ConfigError("sensitivity: dimension mismatch in DG^T w");
  return jacobian_.transpose() * w;
}

LinearForwardModel::LinearForwardModel(Matrix b, Vector offset)
    : b_(std::move(b)), offset_(offset.size() == 0 ? Vector::Zero(b_.rows()) : std::move(offset)) {
  if (offset_.size() != b_.rows()) throw ConfigError("linear model: offset length mismatch");
}

Vector LinearForwardModel::evaluate(const Vector& u) const {
  if (u.size() != b_.cols()) throw ConfigError("linear model: parameter length mismatch");
  return b_ * u + offset_;
}

Linearization LinearForwardModel::linearize(const Vector& u) const {
  return {evaluate(u), SensitivityOperator(u, b_, SensitivityMethod::exact)};
}

ReservoirForwardModel::ReservoirForwardModel(ReservoirModel model, SensitivityMethod method,
                                             double fd_step, int threads)
    : model_(std::move(model)), method_(method), fd_step_(fd_step), threads_(threads) {
  model_.validate();
  if (method_ == SensitivityMethod::exact)
    throw ConfigError("reservoir model: sensitivity method must be adjoint or finite-difference");
}

Vector ReservoirForwardModel::evaluate(const Vector& u) const {
  return simulate(Field(model_.grid, u), model_, {false, false}).observations.values;
}

Linearization ReservoirForwardModel::linearize(const Vector& u) const {
  const Field uf(model_.grid, u);
  if (method_ == SensitivityMethod::finite_difference)
    return {evaluate(u), jacobian_fd(*this, u, fd_step_, threads_)};
  SimulationResult fw = simulate(uf, model_, {true, false});
  SensitivityOperator s = jacobian_adjoint(uf, model_, fw);
  return {std::move(fw.observations.values), std::move(s)};
}

SensitivityOperator jacobian_fd(const ForwardModel& model, const Vector& u, double h, int threads) {
  if (!(h > 0.0)) throw ConfigError("jacobian_fd: step must be positive");
  const Index n = model.parameter_size();
  if (u.size() != n) throw ConfigError("jacobian_fd: parameter length mismatch");
  const Index m = model.observation_size();
  Matrix jac(m, n);
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    Vector up = u;
    for (Index j = next++; j < n; j = next++) {
      try {
        up[j] = u[j] + h;
        const Vector plus = model.evaluate(up);
        up[j] = u[j] - h;
        const Vector minus = model.evaluate(up);
        up[j] = u[j];
        jac.col(j) = (plus - minus) / (2.0 * h);
      } catch (const NumericalError& e) {
        const std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::make_exception_ptr(NumericalError(
              e.module(), e.operation(), "column " + std::to_string(j) + ": " + e.message()));
        next = n;
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };

  const int count = std::max(1, threads);
  if (count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return SensitivityOperator(u, std::move(jac), SensitivityMethod::finite_difference);
}

namespace {

struct ObservationSite {
  Index cell;
  ObservationKind kind;
  double rate;
  double well_index;
};

struct Tape {
  const ReservoirModel& model;
  const SimulationResult& fw;
  Discretization disc;
  std::vector<Vector> injection;
  std::vector<Vector> production;
  std::vector<ObservationSite> sites;  // one per observation
  std::vector<int> report_at_state;   // report index or -1, per state
  Index per_report;

  Tape(const ReservoirModel& m, const SimulationResult& f, const char* operation)
      : model(m), fw(f), disc(m.grid, m.physics, m.wells), per_report(m.observations_per_report()) {
    const std::size_t reports = m.schedule.report_times.size();
    if (f.saturations.empty() || f.saturations.size() != f.stages.size() + 1 ||
        f.stage_pressures.size() != f.stages.size() || f.report_state.size() != reports ||
        f.report_pressures.size() != reports)
      throw NumericalError("sensitivity", operation, "forward run has no stored trajectory");
    for (std::size_t n = 0; n < reports; ++n) {
      injection.push_back(disc.injection(n));
      production.push_back(disc.production(n));
    }
    for (const ObservationEntry& e : f.observations.layout) {
      const WellSpec& w = m.wells[e.well];
      sites.push_back({cell_of(m.grid, w.location), e.kind, w.rate(e.report), w.well_index});
    }
    report_at_state.assign(f.saturations.size(), -1);
    for (std::size_t n = 0; n < reports; ++n) report_at_state[f.report_state[n]] = static_cast<int>(n);
  }
};

/// Per-face sign with which d out_i / d F_f enters, for the cell that set a
/// CFL-limited step: +1 if the face carries flow out of cell a, -1 if out of
/// cell b, 0 otherwise.
double outflow_sign(const detail::Face& face, Index cell, double flux) {
  if (face.a == cell && flux >= 0.0) return 1.0;
  if (face.b == cell && flux < 0.0) return -1.0;
  return 0.0;
}

}  // namespace

Vector tangent_linear(const Field& u, const ReservoirModel& model, const SimulationResult& forward,
                      const Vector& v) {
  const Tape tape(model, forward, "tangent_linear");
  const Discretization& disc = tape.disc;
  const Index n = disc.cell_count();
  if (v.size() != n) throw ConfigError("tangent_linear: direction length mismatch");
  const auto& faces = disc.faces();
  const Vector& pv = disc.pore_volume();
  const PhysicalParams& ph = model.physics;
  const std::size_t stages = forward.stages.size();

  PressureSystem ps(disc);
  Vector dy = Vector::Zero(forward.observations.size());
  Vector ds = Vector::Zero(n);
  double dtime = 0.0;

  for (std::size_t k = 0; k <= stages; ++k) {
    const Vector& s = forward.saturations[k];
    const TransmissibilityTerms tt = detail::transmissibility_terms(disc, u.values(), s);
    ps.factorize(tt.trans);
    const Vector dmob = tt.perm.cwiseProduct(tt.dlam_t).cwiseProduct(ds) + tt.mob.cwiseProduct(v);
    Vector dtrans(static_cast<Index>(faces.size()));
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const auto fi = static_cast<Index>(f);
      dtrans[fi] = tt.h_a[fi] * dmob[faces[f].a] + tt.h_b[fi] * dmob[faces[f].b];
    }

    if (const int rep = tape.report_at_state[k]; rep >= 0) {
      const Vector& p = forward.report_pressures[static_cast<std::size_t>(rep)];
      const Vector dp = -ps.solve(PressureSystem::apply(disc, dtrans, p));
      for (Index j = 0; j < tape.per_report; ++j) {
        const Index col = rep * tape.per_report + j;
        const ObservationSite& site = tape.sites[static_cast<std::size_t>(col)];
        const Index c = site.cell;
        const auto mt = detail::mobility_terms(s[c], ph);
        switch (site.kind) {
          case ObservationKind::bhp: {
            const double extra = site.rate / (site.well_index * tt.perm[c] * mt.lam_t);
            dy[col] = dp[c] - extra * (v[c] + mt.dlam_t / mt.lam_t * ds[c]);
            break;
          }
          case ObservationKind::water_rate:
            dy[col] = mt.df * std::abs(site.rate) * ds[c];
            break;
          case ObservationKind::oil_rate:
            dy[col] = -mt.df * std::abs(site.rate) * ds[c];
            break;
        }
      }
    }
    if (k == stages) break;

    const StageRecord& st = forward.stages[k];
    const Vector& p = forward.stage_pressures[k];
    const Vector& prod = tape.production[st.interval];
    const FluxTerms ft = detail::flux_terms(disc, tt, p, s, prod);
    const Vector r = detail::water_residual(disc, ft, tape.injection[st.interval], prod);
    const Vector dp = -ps.solve(PressureSystem::apply(disc, dtrans, p));

    Vector dflux(static_cast<Index>(faces.size()));
    Vector dr = ft.df_cell.cwiseProduct(prod).cwiseProduct(ds);
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const auto fi = static_cast<Index>(f);
      const Index a = faces[f].a;
      const Index b = faces[f].b;
      dflux[fi] = dtrans[fi] * (p[a] - p[b]) + tt.trans[fi] * (dp[a] - dp[b]);
      const Index up = ft.upwind_a[f] ? a : b;
      const double dw = ft.df_up[fi] * ft.flux[fi] * ds[up] + ft.f_up[fi] * dflux[fi];
      dr[a] -= dw;
      dr[b] += dw;
    }

    double ddt = 0.0;
    if (st.limit == StepLimit::cfl) {
      double dout = 0.0;
      for (std::size_t f : disc.cell_faces()[static_cast<std::size_t>(st.cfl_cell)]) {
        const auto fi = static_cast<Index>(f);
        dout += outflow_sign(faces[f], st.cfl_cell, ft.flux[fi]) * dflux[fi];
      }
      ddt = -st.dt / ft.outflow[st.cfl_cell] * dout;
    } else if (st.limit == StepLimit::report) {
      ddt = -dtime;
    }

    const double lo = ph.s_iw;
    const double hi = 1.0 - ph.s_or;
    Vector dnext(n);
    for (Index i = 0; i < n; ++i) {
      const double pre = s[i] + st.dt * r[i] / pv[i];
      const bool active = pre >= lo && pre <= hi;
      dnext[i] = active ? ds[i] + (ddt * r[i] + st.dt * dr[i]) / pv[i] : 0.0;
    }
    ds = std::move(dnext);
    dtime = st.last_in_interval ? 0.0 : dtime + ddt;
  }
  return dy;
}

SensitivityOperator jacobian_adjoint(const Field& u, const ReservoirModel& model,
                                     const SimulationResult& forward) {
  const Tape tape(model, forward, "jacobian_adjoint");
  const Discretization& disc = tape.disc;
  const Index n = disc.cell_count();
  const Index big_n = forward.observations.size();
  const auto& faces = disc.faces();
  const auto nf = static_cast<Index>(faces.size());
  const Vector& pv = disc.pore_volume();
  const PhysicalParams& ph = model.physics;
  const std::size_t stages = forward.stages.size();
  const double lo = ph.s_iw;
  const double hi = 1.0 - ph.s_or;

  // First observation column whose report state is at or after state k.
  std::vector<Index> first_col(stages + 1, big_n);
  {
    std::size_t rep = forward.report_state.size();
    for (std::size_t k = stages + 1; k-- > 0;) {
      while (rep > 0 && forward.report_state[rep - 1] >= k) --rep;
      first_col[k] = static_cast<Index>(rep) * tape.per_report;
    }
  }

  RowMatrix sh = RowMatrix::Zero(n, big_n);   // adjoint of s
  RowMatrix uh = RowMatrix::Zero(n, big_n);   // adjoint of u
  RowMatrix ph_ = RowMatrix::Zero(n, big_n);  // adjoint of the pressure
  RowMatrix fh = RowMatrix::Zero(nf, big_n);  // adjoint of the face flux
  Eigen::RowVectorXd th = Eigen::RowVectorXd::Zero(big_n);

  PressureSystem ps(disc);
  TransmissibilityTerms tt = detail::transmissibility_terms(disc, u.values(), forward.saturations[stages]);
  const Vector* stage_p = nullptr;

  for (std::size_t k = stages;; --k) {
    const Vector& s = forward.saturations[k];
    const Index c0 = first_col[k];
    const Index w = big_n - c0;
    const int rep = tape.report_at_state[k];
    const Index obs_end = rep >= 0 ? c0 + tape.per_report : c0;

    if (rep >= 0) {
      for (Index col = c0; col < obs_end; ++col) {
        const ObservationSite& site = tape.sites[static_cast<std::size_t>(col)];
        const Index c = site.cell;
        const auto mt = detail::mobility_terms(s[c], ph);
        switch (site.kind) {
          case ObservationKind::bhp: {
            const double extra = site.rate / (site.well_index * tt.perm[c] * mt.lam_t);
            ph_(c, col) += 1.0;
            sh(c, col) -= extra * mt.dlam_t / mt.lam_t;
            uh(c, col) -= extra;
            break;
          }
          case ObservationKind::water_rate:
            sh(c, col) += mt.df * std::abs(site.rate);
            break;
          case ObservationKind::oil_rate:
            sh(c, col) -= mt.df * std::abs(site.rate);
            break;
        }
      }
    }

    if (w > 0) {
      ps.factorize(tt.trans);
      ps.solve_transpose(ph_, c0);
      const Vector* obs_p = rep >= 0 ? &forward.report_pressures[static_cast<std::size_t>(rep)] : nullptr;
      const Vector sdl = tt.perm.cwiseProduct(tt.dlam_t);
      Eigen::RowVectorXd that(w);
      for (Index f = 0; f < nf; ++f) {
        const Index a = faces[static_cast<std::size_t>(f)].a;
        const Index b = faces[static_cast<std::size_t>(f)].b;
        const double* ra = ph_.row(a).data() + c0;
        const double* rb = ph_.row(b).data() + c0;
        Index c = 0;
        if (obs_p) {
          const double dp = (*obs_p)[a] - (*obs_p)[b];
          for (; c < obs_end - c0; ++c) that[c] = -dp * (ra[c] - rb[c]);
        }
        if (stage_p) {
          const double dp = (*stage_p)[a] - (*stage_p)[b];
          const double* fr = fh.row(f).data() + c0;
          for (; c < w; ++c) that[c] = dp * (fr[c] - ra[c] + rb[c]);
        }
        const double ka = tt.h_a[f];
        const double kb = tt.h_b[f];
        double* sa = sh.row(a).data() + c0;
        double* sb = sh.row(b).data() + c0;
        double* ua = uh.row(a).data() + c0;
        double* ub = uh.row(b).data() + c0;
        const double sa_k = sdl[a] * ka, sb_k = sdl[b] * kb;
        const double ua_k = tt.mob[a] * ka, ub_k = tt.mob[b] * kb;
        for (c = 0; c < w; ++c) {
          sa[c] += sa_k * that[c];
          sb[c] += sb_k * that[c];
          ua[c] += ua_k * that[c];
          ub[c] += ub_k * that[c];
        }
      }
      ph_.rightCols(w).setZero();
    }
    if (!sh.allFinite())
      throw NumericalError("sensitivity", "jacobian_adjoint",
                           "non-finite adjoint state at step " + std::to_string(k));
    if (k == 0) break;

    // Saturation update of stage j = k - 1, columns with report state >= k.
    const std::size_t j = k - 1;
    const StageRecord& st = forward.stages[j];
    const Vector& sj = forward.saturations[j];
    stage_p = &forward.stage_pressures[j];
    const Vector& p = *stage_p;
    const Vector& prod = tape.production[st.interval];
    tt = detail::transmissibility_terms(disc, u.values(), sj);
    const FluxTerms ft = detail::flux_terms(disc, tt, p, sj, prod);
    const Vector r = detail::water_residual(disc, ft, tape.injection[st.interval], prod);

    auto sblock = sh.rightCols(w);
    for (Index i = 0; i < n; ++i) {
      const double pre = sj[i] + st.dt * r[i] / pv[i];
      if (!(pre >= lo && pre <= hi)) sblock.row(i).setZero();
    }
    if (st.last_in_interval) th.tail(w).setZero();
    const Vector r_pv = r.cwiseQuotient(pv);
    const Eigen::RowVectorXd dth = r_pv.transpose() * sblock + th.tail(w);
    RowMatrix rh = (st.dt * pv.cwiseInverse()).asDiagonal() * sblock;
    sblock += (ft.df_cell.cwiseProduct(prod)).asDiagonal() * rh;

    fh.rightCols(w).setZero();
    for (Index f = 0; f < nf; ++f) {
      const Index a = faces[static_cast<std::size_t>(f)].a;
      const Index b = faces[static_cast<std::size_t>(f)].b;
      const Index up = ft.upwind_a[static_cast<std::size_t>(f)] ? a : b;
      const double fu = ft.f_up[f];
      const double g = ft.df_up[f] * ft.flux[f];
      const double* ra = rh.row(a).data();
      const double* rb = rh.row(b).data();
      double* fr = fh.row(f).data() + c0;
      double* su = sh.row(up).data() + c0;
      for (Index c = 0; c < w; ++c) {
        const double wh = rb[c] - ra[c];
        fr[c] = fu * wh;
        su[c] += g * wh;
      }
    }
    if (st.limit == StepLimit::cfl) {
      const double coef = -st.dt / ft.outflow[st.cfl_cell];
      for (std::size_t f : disc.cell_faces()[static_cast<std::size_t>(st.cfl_cell)]) {
        const auto fi = static_cast<Index>(f);
        const double sign = outflow_sign(faces[f], st.cfl_cell, ft.flux[fi]);
        if (sign != 0.0) fh.row(fi).tail(w) += (coef * sign) * dth;
      }
    }
    if (st.limit == StepLimit::report) th.tail(w) = -dth;

    for (Index f = 0; f < nf; ++f) {
      const Index a = faces[static_cast<std::size_t>(f)].a;
      const Index b = faces[static_cast<std::size_t>(f)].b;
      const double t = tt.trans[f];
      const double* fr = fh.row(f).data() + c0;
      double* pa = ph_.row(a).data() + c0;
      double* pb = ph_.row(b).data() + c0;
      for (Index c = 0; c < w; ++c) {
        pa[c] += t * fr[c];
        pb[c] -= t * fr[c];
      }
    }
  }
  return SensitivityOperator(u.values(), Matrix(uh.transpose()), SensitivityMethod::adjoint);
}

SensitivityOperator jacobian_adjoint(const Field& u, const ReservoirModel& model) {
  const SimulationResult fw = simulate(u, model, {true, false});
  return jacobian_adjoint(u, model, fw);
}

SensitivityProducts assemble_products(const SensitivityOperator& s, const CovarianceOperator& c) {
  if (s.cols() != c.size()) throw ConfigError("assemble_products: dimension mismatch");
  SensitivityProducts out;
  out.c_dgt = c.apply(Matrix(s.jacobian().transpose()));
  const Matrix m = s.jacobian() * out.c_dgt;
  out.dg_c_dgt = 0.5 * (m + m.transpose());
  return out;
}

void write_jacobian(const std::filesystem::path& path, const SensitivityOperator& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out.write("RSJ1", 4);
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(s.rows()), static_cast<std::uint64_t>(s.cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  const RowMatrix rm = s.jacobian();
  out.write(reinterpret_cast<const char*>(rm.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rm.size())));
  if (!out) throw ConfigError("failed writing " + path.string());
}

Matrix read_jacobian(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  char magic[4];
  std::uint64_t dims[2];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!in || std::string(magic, 4) != "RSJ1") throw ConfigError(path.string() + ": not a Jacobian dump");
  RowMatrix rm(static_cast<Index>(dims[0]), static_cast<Index>(dims[1]));
  in.read(reinterpret_cast<char*>(rm.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rm.size())));
  if (!in) throw ConfigError(path.string() + ": truncated Jacobian dump");
  return rm;
}

}  // namespace resinv
