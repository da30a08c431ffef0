#include "fixtures.hpp"
#include "resinv/error.hpp"
#include "resinv/grid_model.hpp"

#include <doctest.h>

using namespace resinv;

TEST_CASE("cell_of maps points to containing cells") {
  const Grid g(2, 2, 2.0, 2.0);
  CHECK(cell_of(g, {0.5, 0.5}) == g.index(0, 0));
  CHECK(cell_of(g, {1.5, 1.5}) == g.index(1, 1));
  CHECK_THROWS_AS(cell_of(g, {-1.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(cell_of(g, {0.5, 2.5}), ConfigError);
  CHECK(cell_of(g, {2.0, 2.0}) == g.index(1, 1));
  CHECK(cell_of(g, {1.0, 0.2}) == g.index(1, 0));
}

TEST_CASE("cell_of round-trips every cell centre") {
  for (auto [nx, ny] : {std::pair{2, 2}, std::pair{7, 3}, std::pair{16, 16}}) {
    const Grid g(nx, ny, 1234.5, 321.0, 7.0);
    for (Index c = 0; c < g.cell_count(); ++c) CHECK(cell_of(g, g.center(c)) == c);
  }
}

TEST_CASE("grid invariants") {
  CHECK_THROWS_AS(Grid(1, 4, 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(Grid(4, 4, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(Grid(4, 4, 1.0, 1.0, -1.0), ConfigError);
  const Grid g(4, 5, 8.0, 10.0);
  CHECK(g.dx() == doctest::Approx(2.0));
  CHECK(g.dy() == doctest::Approx(2.0));
  CHECK(g.thickness() == 1.0);
  for (Index c = 0; c < g.cell_count(); ++c) {
    const Point p = g.center(c);
    CHECK(p.x > 0.0);
    CHECK(p.x < g.lx());
    CHECK(p.y > 0.0);
    CHECK(p.y < g.ly());
  }
}

TEST_CASE("field requires one value per cell") {
  const Grid g(3, 3, 1.0, 1.0);
  CHECK_THROWS_AS(Field(g, Vector::Zero(8)), ConfigError);
  Field f(g, 2.0);
  CHECK(f.size() == 9);
  CHECK(f.all_finite());
  f[4] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(f.all_finite());
}

TEST_CASE("pore volume is positive") {
  const auto m = fixtures::two_well_model(8, 2, fixtures::year);
  CHECK(m.total_pore_volume() == doctest::Approx(0.2 * 2000.0 * 2000.0 * 100.0));
}

TEST_CASE("model validation") {
  auto m = fixtures::two_well_model(8, 3, fixtures::year);
  CHECK_NOTHROW(m.validate());
  CHECK(m.observations_per_report() == 3);
  CHECK(m.observation_count() == 9);

  auto bad = m;
  bad.physics.s0 = 0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = m;
  bad.wells[0].rates = {-1.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = m;
  bad.wells[1].location = {3000.0, 10.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = m;
  bad.schedule.report_times = {2.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = m;
  bad.physics.porosity[3] = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = m;
  bad.physics.s_iw = 0.6;
  bad.physics.s_or = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("well rate schedules") {
  WellSpec w;
  w.name = "w";
  w.rates = {1.0, 2.0};
  CHECK(w.rate(1) == 2.0);
  CHECK_THROWS_AS(w.rate(2), ConfigError);
  w.rates = {3.0};
  CHECK(w.rate(7) == 3.0);
}

TEST_CASE("peaceman geometric factor") {
  const Grid g(10, 10, 1000.0, 1000.0, 100.0);
  const double expected = 2.0 * 3.141592653589793 * 100.0 / std::log(20.0 / 0.1);
  CHECK(peaceman_geometric_index(g, 0.1, 0.2) == doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(peaceman_geometric_index(g, 50.0, 0.2), ConfigError);
}

TEST_CASE("uniform schedule") {
  const Schedule s = uniform_schedule(10.0, 4, 1.0);
  REQUIRE(s.report_times.size() == 4);
  CHECK(s.report_times[0] == doctest::Approx(2.5));
  CHECK(s.report_times.back() == 10.0);
  CHECK(s.cfl == 0.5);
}
