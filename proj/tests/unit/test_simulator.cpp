#include "detail/discretization.hpp"
#include "fixtures.hpp"
#include "resinv/error.hpp"
#include "resinv/simulator.hpp"

#include <doctest.h>

#include <Eigen/Dense>

using namespace resinv;
using fixtures::day;
using fixtures::year;

namespace {

ReservoirModel zero_rate(ReservoirModel m) {
  for (auto& w : m.wells) w.rates = {0.0};
  return m;
}

Vector relative_gap(const Vector& a, const Vector& b, const Vector& scale) {
  return (a - b).cwiseQuotient(scale.cwiseAbs());
}

}  // namespace

TEST_CASE("relative permeabilities") {
  const PhysicalParams ph;
  CHECK(rel_perm_water(0.2, ph) == 0.0);
  CHECK(rel_perm_water(0.8, ph) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(rel_perm_water(0.5, ph) == doctest::Approx(0.075).epsilon(1e-15));
  CHECK(rel_perm_oil(0.2, ph) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(rel_perm_oil(0.8, ph) == 0.0);
  CHECK(rel_perm_water(0.95, ph) == rel_perm_water(0.8, ph));
  CHECK(rel_perm_oil(0.05, ph) == rel_perm_oil(0.2, ph));
}

TEST_CASE("mobilities") {
  const PhysicalParams ph;
  CHECK(mobilities(0.2, ph).water == 0.0);
  CHECK(mobilities(0.2, ph).total == doctest::Approx(90.0).epsilon(1e-14));
  CHECK(mobilities(0.8, ph).water == doctest::Approx(600.0).epsilon(1e-14));
  CHECK(mobilities(0.8, ph).total == doctest::Approx(600.0).epsilon(1e-14));
}

TEST_CASE("mobility derivatives match finite differences") {
  const PhysicalParams ph;
  for (double s : {0.25, 0.4, 0.55, 0.7, 0.79}) {
    const auto m = detail::mobility_terms(s, ph);
    const double h = 1e-7;
    const auto mp = detail::mobility_terms(s + h, ph);
    const auto mm = detail::mobility_terms(s - h, ph);
    CHECK(m.dlam_t == doctest::Approx((mp.lam_t - mm.lam_t) / (2 * h)).epsilon(1e-6));
    CHECK(m.df == doctest::Approx((mp.f - mm.f) / (2 * h)).epsilon(1e-6));
  }
  const double slope = detail::max_fractional_flow_slope(ph);
  for (int k = 0; k <= 1000; ++k) CHECK(detail::mobility_terms(0.2 + 0.6 * k / 1000.0, ph).df <= slope);
  CHECK(slope > 4.0);
  CHECK(slope < 5.0);
}

TEST_CASE("pressure with zero rates is uniform") {
  const auto m = zero_rate(fixtures::two_well_model(6, 2, year));
  const Field u = fixtures::log_perm(m.grid, 1);
  const Field p = solve_pressure(u, Field(m.grid, 0.3), m);
  CHECK((p.values().array() - m.physics.p0).abs().maxCoeff() == 0.0);
}

TEST_CASE("pressure is antisymmetric for a symmetric well pair") {
  auto m = fixtures::two_well_model(6, 2, year);
  m.wells[0].location = {500.0, 1000.0};
  m.wells[1].location = {2000.0 - 500.0, 1000.0};
  const Grid& g = m.grid;
  const Field u(g, -28.0);
  const Field p = solve_pressure(u, Field(g, 0.2), m);
  double scale = 0.0;
  for (Index c = 0; c < g.cell_count(); ++c) scale = std::max(scale, std::abs(p[c] - m.physics.p0));
  for (int iy = 0; iy < g.ny(); ++iy)
    for (int ix = 0; ix < g.nx(); ++ix) {
      const double a = p[g.index(ix, iy)] - m.physics.p0;
      const double b = p[g.index(g.nx() - 1 - ix, iy)] - m.physics.p0;
      CHECK(std::abs(a + b) <= 1e-10 * scale);
    }
}

TEST_CASE("pressure matches a dense solve") {
  const Grid g(4, 4, 400.0, 400.0, 10.0);
  ReservoirModel m{g, fixtures::physics_for(g), {}, uniform_schedule(day, 1, day)};
  m.wells.push_back(fixtures::well("I", WellKind::injector, {50.0, 50.0}, 1e-3, g));
  m.wells.push_back(fixtures::well("P", WellKind::producer, {350.0, 250.0}, -1e-3, g));
  const Field u = fixtures::log_perm(g, 7, 1.0);
  Vector sv = fixtures::random_vector(g.cell_count(), 8, 0.1).cwiseAbs();
  sv.array() += 0.25;
  const Field s(g, sv);
  const Field p = solve_pressure(u, s, m);

  const detail::Discretization disc(g, m.physics, m.wells);
  const auto tt = detail::transmissibility_terms(disc, u.values(), s.values());
  Matrix a = Matrix::Zero(g.cell_count() + 1, g.cell_count());
  for (std::size_t f = 0; f < disc.faces().size(); ++f) {
    const auto& fc = disc.faces()[f];
    const double t = tt.trans[static_cast<Index>(f)];
    a(fc.a, fc.a) += t;
    a(fc.b, fc.b) += t;
    a(fc.a, fc.b) -= t;
    a(fc.b, fc.a) -= t;
  }
  a.row(g.cell_count()).setConstant(tt.trans.mean());
  Vector rhs = Vector::Zero(g.cell_count() + 1);
  rhs.head(g.cell_count()) = disc.sources(0);
  const Vector dense = a.colPivHouseholderQr().solve(rhs);
  const Vector b = disc.sources(0);
  const Vector shifted = p.values().array() - m.physics.p0;
  CHECK((detail::PressureSystem::apply(disc, tt.trans, shifted) - b).norm() <= 1e-10 * b.norm());
  CHECK((shifted - dense).norm() <= 1e-10 * dense.norm());
}

TEST_CASE("pressure rejects unbalanced rates") {
  auto m = fixtures::two_well_model(4, 1, year);
  m.wells[1].rates = {-0.5 * m.wells[0].rates[0]};
  CHECK_THROWS_AS(solve_pressure(Field(m.grid, -28.0), Field(m.grid, 0.2), m), NumericalError);
}

TEST_CASE("transposed pressure solve") {
  const auto m = fixtures::two_well_model(5, 1, year);
  const Field u = fixtures::log_perm(m.grid, 3);
  const detail::Discretization disc(m.grid, m.physics, m.wells);
  const auto tt = detail::transmissibility_terms(disc, u.values(), Vector::Constant(25, 0.3));
  detail::PressureSystem ps(disc);
  ps.factorize(tt.trans);
  const Index n = 25;
  Matrix forward(n, n);
  for (Index j = 0; j < n; ++j) forward.col(j) = ps.solve(Vector::Unit(n, j));
  detail::RowMatrix y = detail::RowMatrix::Identity(n, n);
  ps.solve_transpose(y);
  CHECK((Matrix(y) - forward.transpose()).norm() <= 1e-10 * forward.norm());
}

TEST_CASE("advance saturation") {
  const Grid g(2, 2, 200.0, 200.0, 10.0);
  const double q = 1e-3;
  ReservoirModel m{g, fixtures::physics_for(g), {}, uniform_schedule(10 * day, 1, 10 * day)};
  m.wells.push_back(fixtures::well("I", WellKind::injector, {50.0, 50.0}, q, g));
  m.wells.push_back(fixtures::well("P", WellKind::producer, {150.0, 50.0}, -q, g));
  const Field u(g, -28.0);
  const Field s(g, m.physics.s_iw);

  SUBCASE("zero rates leave saturation unchanged") {
    const auto z = zero_rate(m);
    const Field s2(g, 0.45);
    const Field p = solve_pressure(u, s2, z);
    CHECK(advance_saturation(u, p, s2, day, z).values() == s2.values());
  }

  SUBCASE("hand-computed two-column waterflood step") {
    const Field p = solve_pressure(u, s, m);
    // Uniform transmissibility T: p_0 - p_1 = 3q / (4T), p_0 - p_2 = q / (4T).
    const double t = 10.0 * 90.0 * std::exp(-28.0);
    CHECK(p[0] - p[1] == doctest::Approx(0.75 * q / t).epsilon(1e-12));
    CHECK(p[0] - p[2] == doctest::Approx(0.25 * q / t).epsilon(1e-12));
    const double dt = day;
    const Field next = advance_saturation(u, p, s, dt, m);
    const double pv = 0.2 * 100.0 * 100.0 * 10.0;
    CHECK(next[0] == doctest::Approx(m.physics.s_iw + dt * q / pv).epsilon(1e-14));
    CHECK(next[0] > s[0]);
    CHECK(next[1] == m.physics.s_iw);
    CHECK(next[2] == m.physics.s_iw);
    CHECK(next[3] == m.physics.s_iw);
  }

  SUBCASE("CFL violation") {
    const Field p = solve_pressure(u, s, m);
    CHECK_THROWS_AS(advance_saturation(u, p, s, 1e4 * day, m), NumericalError);
  }
}

TEST_CASE("simulate: early reports see no water at the producer") {
  auto m = fixtures::two_well_model(8, 2, 20 * day);
  const Field u(m.grid, std::log(500.0 * 9.869233e-16));
  const auto r = simulate(u, m);
  const Vector& y = r.observations.values;
  REQUIRE(y.size() == 6);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == doctest::Approx(m.wells[0].rates[0]).epsilon(1e-15));
  CHECK(r.reports.size() == 2);
  CHECK(r.reports[1].time == 20 * day);
}

TEST_CASE("simulate: zero rates give p0 at every injector") {
  const auto m = zero_rate(fixtures::two_well_model(6, 3, year));
  const auto r = simulate(fixtures::log_perm(m.grid, 5), m);
  for (std::size_t i = 0; i < r.observations.layout.size(); ++i)
    if (r.observations.layout[i].kind == ObservationKind::bhp)
      CHECK(r.observations.values[static_cast<Index>(i)] == m.physics.p0);
}

TEST_CASE("simulate: physical invariants") {
  auto m = fixtures::two_well_model(8, 4, 4 * year);
  const Field u = fixtures::log_perm(m.grid, 11);
  const auto r = simulate(u, m);
  const auto& d = r.diagnostics;
  CHECK(d.max_pressure_residual <= 1e-10);
  CHECK(d.max_water_imbalance <= 1e-10);
  CHECK(d.max_clamp_violation <= 1e-6);
  CHECK(d.max_cfl_number <= 0.5 + 1e-12);
  CHECK(d.min_saturation >= m.physics.s_iw);
  CHECK(d.max_saturation <= 1.0 - m.physics.s_or);
  CHECK(d.max_saturation > m.physics.s_iw + 0.1);

  const Vector& y = r.observations.values;
  for (std::size_t n = 0; n < 4; ++n) {
    const double q = std::abs(m.wells[1].rates[0]);
    CHECK(y[static_cast<Index>(3 * n + 1)] + y[static_cast<Index>(3 * n + 2)] == q);
  }
  CHECK(y[10] >= 0.0);
  CHECK(r.saturations.size() == r.stages.size() + 1);
  CHECK(r.report_state.back() == r.stages.size());
}

TEST_CASE("simulate: mirror symmetry") {
  const Grid g(7, 7, 1400.0, 1400.0, 100.0);
  ReservoirModel m{g, fixtures::physics_for(g), {}, uniform_schedule(3 * year, 3, 3 * year)};
  const double q = 0.02;
  m.wells.push_back(fixtures::well("I", WellKind::injector, {700.0, 300.0}, q, g));
  m.wells.push_back(fixtures::well("P1", WellKind::producer, {300.0, 1100.0}, -q / 2, g));
  m.wells.push_back(fixtures::well("P2", WellKind::producer, {1100.0, 1100.0}, -q / 2, g));
  Vector uv = fixtures::log_perm(g, 2).values();
  for (int iy = 0; iy < 7; ++iy)
    for (int ix = 4; ix < 7; ++ix) uv[g.index(ix, iy)] = uv[g.index(6 - ix, iy)];
  const auto r = simulate(Field(g, uv), m);
  const Vector& y = r.observations.values;
  for (Index n = 0; n < 3; ++n) {
    CHECK(std::abs(y[5 * n + 1] - y[5 * n + 2]) <= 1e-8 * q);
    CHECK(std::abs(y[5 * n + 3] - y[5 * n + 4]) <= 1e-8 * q);
  }
  CHECK(y[11] > 0.0);
}

TEST_CASE("simulate: first-order self-convergence in time") {
  auto m = fixtures::two_well_model(8, 3, 3 * year);
  m.schedule.max_dt = 20 * day;
  const Field u = fixtures::log_perm(m.grid, 21);
  std::vector<Vector> ys;
  for (double scale : {1.0, 0.5, 0.25}) {
    auto mm = m;
    mm.schedule.max_dt *= scale;
    mm.schedule.cfl *= scale;
    ys.push_back(simulate(u, mm, {false, false}).observations.values);
  }
  const Vector scale = ys[2].cwiseAbs().cwiseMax(1e-3 * std::abs(m.wells[0].rates[0]));
  const double coarse = relative_gap(ys[0], ys[1], scale).norm();
  const double fine = relative_gap(ys[1], ys[2], scale).norm();
  MESSAGE("self-convergence ratio " << coarse / fine);
  CHECK(coarse / fine >= 1.6);
  CHECK(coarse / fine <= 2.4);
}
