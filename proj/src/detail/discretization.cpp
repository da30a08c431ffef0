#include "detail/discretization.hpp"

#include "resinv/error.hpp"

#include <algorithm>
#include <cmath>

namespace resinv::detail {

MobilityTerms mobility_terms(double s, const PhysicalParams& ph) {
  const double den = 1.0 - ph.s_iw - ph.s_or;
  double sn = (s - ph.s_iw) / den;
  double dsn = 1.0 / den;
  if (sn < 0.0) {
    sn = 0.0;
    dsn = 0.0;
  } else if (sn > 1.0) {
    sn = 1.0;
    dsn = 0.0;
  }
  MobilityTerms m{};
  m.lam_w = ph.a_w * sn * sn / ph.mu_w;
  const double lam_o = ph.a_o * (1.0 - sn) * (1.0 - sn) / ph.mu_o;
  m.lam_t = m.lam_w + lam_o;
  m.dlam_w = 2.0 * ph.a_w * sn * dsn / ph.mu_w;
  const double dlam_o = -2.0 * ph.a_o * (1.0 - sn) * dsn / ph.mu_o;
  m.dlam_t = m.dlam_w + dlam_o;
  m.f = m.lam_w / m.lam_t;
  m.df = (m.dlam_w * m.lam_t - m.lam_w * m.dlam_t) / (m.lam_t * m.lam_t);
  return m;
}

double max_fractional_flow_slope(const PhysicalParams& ph) {
  const double lo = ph.s_iw;
  const double hi = 1.0 - ph.s_or;
  constexpr int samples = 4000;
  const double h = (hi - lo) / samples;
  int best = 0;
  double best_val = -1.0;
  for (int k = 0; k <= samples; ++k) {
    const double v = mobility_terms(lo + k * h, ph).df;
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  // Golden-section refinement inside the bracketing samples.
  double a = lo + std::max(best - 1, 0) * h;
  double b = lo + std::min(best + 1, samples) * h;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double c = b - g * (b - a);
    const double d = a + g * (b - a);
    if (mobility_terms(c, ph).df > mobility_terms(d, ph).df)
      b = d;
    else
      a = c;
  }
  return std::max(best_val, mobility_terms(0.5 * (a + b), ph).df);
}

Discretization::Discretization(const Grid& grid, const PhysicalParams& physics,
                               const std::vector<WellSpec>& wells)
    : grid_(grid), physics_(physics), wells_(wells) {
  const Index n = grid.cell_count();
  if (physics_.porosity.size() != n) throw ConfigError("physics: porosity must have one value per cell");
  cell_faces_.resize(static_cast<std::size_t>(n));
  const double gx = grid.thickness() * grid.dy() / grid.dx();
  const double gy = grid.thickness() * grid.dx() / grid.dy();
  for (int iy = 0; iy < grid.ny(); ++iy) {
    for (int ix = 0; ix < grid.nx(); ++ix) {
      const Index c = grid.index(ix, iy);
      if (ix + 1 < grid.nx()) faces_.push_back({c, grid.index(ix + 1, iy), gx});
      if (iy + 1 < grid.ny()) faces_.push_back({c, grid.index(ix, iy + 1), gy});
    }
  }
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    cell_faces_[static_cast<std::size_t>(faces_[f].a)].push_back(f);
    cell_faces_[static_cast<std::size_t>(faces_[f].b)].push_back(f);
  }
  for (std::size_t w = 0; w < wells_.size(); ++w) well_cells_.push_back({cell_of(grid, wells_[w].location), w});
  pore_volume_ = physics_.porosity * grid.cell_volume();
  max_flow_slope_ = max_fractional_flow_slope(physics_);
}

Vector Discretization::injection(std::size_t interval) const {
  Vector q = Vector::Zero(cell_count());
  for (const WellCell& wc : well_cells_) {
    const WellSpec& w = wells_[wc.well];
    if (w.kind == WellKind::injector) q[wc.cell] += w.rate(interval);
  }
  return q;
}

Vector Discretization::production(std::size_t interval) const {
  Vector q = Vector::Zero(cell_count());
  for (const WellCell& wc : well_cells_) {
    const WellSpec& w = wells_[wc.well];
    if (w.kind == WellKind::producer) q[wc.cell] += w.rate(interval);
  }
  return q;
}

Vector Discretization::sources(std::size_t interval) const {
  double net = 0.0;
  double gross = 0.0;
  for (const WellSpec& w : wells_) {
    net += w.rate(interval);
    gross += std::abs(w.rate(interval));
  }
  if (std::abs(net) > 1e-12 * gross)
    throw NumericalError("simulator", "solve_pressure",
                         "well rates do not balance (incompressible flow needs zero net rate)");
  return injection(interval) + production(interval);
}

TransmissibilityTerms transmissibility_terms(const Discretization& disc, const Vector& u,
                                             const Vector& s) {
  const Index n = disc.cell_count();
  const PhysicalParams& ph = disc.physics();
  TransmissibilityTerms tt;
  tt.perm = u.array().exp();
  tt.mob.resize(n);
  tt.lam_t.resize(n);
  tt.dlam_t.resize(n);
  for (Index i = 0; i < n; ++i) {
    const MobilityTerms m = mobility_terms(s[i], ph);
    tt.lam_t[i] = m.lam_t;
    tt.dlam_t[i] = m.dlam_t;
    tt.mob[i] = m.lam_t * tt.perm[i];
    if (!(tt.mob[i] > 0.0) || !std::isfinite(tt.mob[i]))
      throw NumericalError("simulator", "solve_pressure", "cell mobility vanished or is not finite");
  }
  const auto& faces = disc.faces();
  const auto nf = static_cast<Index>(faces.size());
  tt.trans.resize(nf);
  tt.h_a.resize(nf);
  tt.h_b.resize(nf);
  for (Index f = 0; f < nf; ++f) {
    const Face& fc = faces[static_cast<std::size_t>(f)];
    const double ma = tt.mob[fc.a];
    const double mb = tt.mob[fc.b];
    const double sum = ma + mb;
    tt.trans[f] = fc.geom * 2.0 * ma * mb / sum;
    tt.h_a[f] = fc.geom * 2.0 * mb * mb / (sum * sum);
    tt.h_b[f] = fc.geom * 2.0 * ma * ma / (sum * sum);
  }
  return tt;
}

PressureSystem::PressureSystem(const Discretization& disc)
    : n_(disc.cell_count()), faces_(disc.faces()) {
  const Index m = n_ - 1;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(faces_.size() * 4 + static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) trip.emplace_back(i, i, 1.0);
  for (const Face& f : faces_) {
    if (f.a > 0 && f.b > 0) {
      trip.emplace_back(f.a - 1, f.b - 1, 1.0);
      trip.emplace_back(f.b - 1, f.a - 1, 1.0);
    }
  }
  reduced_.resize(m, m);
  reduced_.setFromTriplets(trip.begin(), trip.end());
  reduced_.makeCompressed();

  auto slot = [&](Index row, Index col) -> std::ptrdiff_t {
    if (row < 0 || col < 0) return -1;
    const auto* outer = reduced_.outerIndexPtr();
    const auto* inner = reduced_.innerIndexPtr();
    const auto* begin = inner + outer[col];
    const auto* end = inner + outer[col + 1];
    const auto* it = std::lower_bound(begin, end, static_cast<int>(row));
    return it - inner;
  };
  for (const Face& f : faces_) {
    const Index a = f.a - 1;
    const Index b = f.b - 1;
    Slots s{};
    s.aa = slot(a, a);
    s.bb = slot(b, b);
    s.ab = (a >= 0 && b >= 0) ? slot(a, b) : -1;
    s.ba = (a >= 0 && b >= 0) ? slot(b, a) : -1;
    slots_.push_back(s);
  }
  ldlt_.analyzePattern(reduced_);
}

void PressureSystem::factorize(const Vector& trans) {
  double* val = reduced_.valuePtr();
  std::fill(val, val + reduced_.nonZeros(), 0.0);
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const double t = trans[static_cast<Index>(f)];
    const Slots& s = slots_[f];
    if (s.aa >= 0) val[s.aa] += t;
    if (s.bb >= 0) val[s.bb] += t;
    if (s.ab >= 0) val[s.ab] -= t;
    if (s.ba >= 0) val[s.ba] -= t;
  }
  ldlt_.factorize(reduced_);
  if (ldlt_.info() != Eigen::Success)
    throw NumericalError("simulator", "solve_pressure", "pressure matrix factorization failed");
}

Vector PressureSystem::solve(const Vector& r) const {
  Vector x(n_);
  x[0] = 0.0;
  x.tail(n_ - 1) = ldlt_.solve(r.tail(n_ - 1));
  x.array() -= x.mean();
  return x;
}

void PressureSystem::solve_transpose(RowMatrix& y, Index first_col) const {
  // Transpose of  r -> (I - 11^T/n) E A_red^{-1} R r.
  const Index w = y.cols() - first_col;
  if (w <= 0) return;
  const Eigen::RowVectorXd mean = y.rightCols(w).colwise().mean();
  RowMatrix red = y.bottomRows(n_ - 1).rightCols(w).rowwise() - mean;
  solve_reduced_block(red);
  y.row(0).tail(w).setZero();
  y.bottomRows(n_ - 1).rightCols(w) = red;
}

void PressureSystem::solve_reduced_block(RowMatrix& x) const {
  // P A P^T = L D L^T with L unit lower triangular (column-major storage).
  RowMatrix y = ldlt_.permutationP() * x;
  const auto& lmat = ldlt_.matrixL().nestedExpression();
  const Vector& d = ldlt_.vectorD();
  const Index m = n_ - 1;
  const Index w = y.cols();
  for (Index j = 0; j < m; ++j) {
    const double* yj = y.row(j).data();
    for (Eigen::SparseMatrix<double>::InnerIterator it(lmat, j); it; ++it) {
      const Index i = it.row();
      if (i <= j) continue;
      const double lij = it.value();
      double* yi = y.row(i).data();
      for (Index c = 0; c < w; ++c) yi[c] -= lij * yj[c];
    }
  }
  for (Index i = 0; i < m; ++i) y.row(i) /= d[i];
  for (Index j = m - 1; j >= 0; --j) {
    double* yj = y.row(j).data();
    for (Eigen::SparseMatrix<double>::InnerIterator it(lmat, j); it; ++it) {
      const Index i = it.row();
      if (i <= j) continue;
      const double lij = it.value();
      const double* yi = y.row(i).data();
      for (Index c = 0; c < w; ++c) yj[c] -= lij * yi[c];
    }
  }
  x = ldlt_.permutationPinv() * y;
}

Vector PressureSystem::apply(const Discretization& disc, const Vector& trans, const Vector& x) {
  Vector out = Vector::Zero(disc.cell_count());
  const auto& faces = disc.faces();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& fc = faces[f];
    const double flux = trans[static_cast<Index>(f)] * (x[fc.a] - x[fc.b]);
    out[fc.a] += flux;
    out[fc.b] -= flux;
  }
  return out;
}

FluxTerms flux_terms(const Discretization& disc, const TransmissibilityTerms& tt, const Vector& p,
                     const Vector& s, const Vector& production) {
  const Index n = disc.cell_count();
  const auto& faces = disc.faces();
  const auto nf = static_cast<Index>(faces.size());
  const PhysicalParams& ph = disc.physics();
  FluxTerms ft;
  ft.f_cell.resize(n);
  ft.df_cell.resize(n);
  for (Index i = 0; i < n; ++i) {
    const MobilityTerms m = mobility_terms(s[i], ph);
    ft.f_cell[i] = m.f;
    ft.df_cell[i] = m.df;
  }
  ft.flux.resize(nf);
  ft.f_up.resize(nf);
  ft.df_up.resize(nf);
  ft.upwind_a.resize(static_cast<std::size_t>(nf));
  ft.outflow = -production;
  for (Index f = 0; f < nf; ++f) {
    const Face& fc = faces[static_cast<std::size_t>(f)];
    const double flux = tt.trans[f] * (p[fc.a] - p[fc.b]);
    ft.flux[f] = flux;
    const bool up_a = flux >= 0.0;
    ft.upwind_a[static_cast<std::size_t>(f)] = up_a ? 1 : 0;
    const Index up = up_a ? fc.a : fc.b;
    ft.f_up[f] = ft.f_cell[up];
    ft.df_up[f] = ft.df_cell[up];
    if (up_a)
      ft.outflow[fc.a] += flux;
    else
      ft.outflow[fc.b] -= flux;
  }
  return ft;
}

Vector water_residual(const Discretization& disc, const FluxTerms& ft, const Vector& injection,
                      const Vector& production) {
  Vector r = injection + ft.f_cell.cwiseProduct(production);
  const auto& faces = disc.faces();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto fi = static_cast<Index>(f);
    const double w = ft.f_up[fi] * ft.flux[fi];
    r[faces[f].a] -= w;
    r[faces[f].b] += w;
  }
  return r;
}

}  // namespace resinv::detail
