#include "fixtures.hpp"
#include "resinv/error.hpp"
#include "resinv/geostat.hpp"

#include <doctest.h>

#include <numbers>

using namespace resinv;

TEST_CASE("spherical covariance values") {
  CHECK(spherical_cov({1.0, 2.0}, {1.0, 2.0}, 3.0) == 1.0);
  CHECK(spherical_cov({0.0, 0.0}, {3.0, 0.0}, 3.0) == 0.0);
  CHECK(spherical_cov({0.0, 0.0}, {1.5, 0.0}, 3.0) == doctest::Approx(0.3125).epsilon(1e-15));
  CHECK(spherical_cov({0.0, 0.0}, {0.0, 10.0}, 3.0) == 0.0);
}

TEST_CASE("spherical covariance is symmetric and non-increasing") {
  const AnisotropyMap m{0.3, 0.5};
  const Point a{1.0, 2.0};
  const Point b{2.5, -0.7};
  CHECK(spherical_cov(a, b, 4.0, m) == spherical_cov(b, a, 4.0, m));
  double prev = 1.0;
  for (int k = 0; k <= 200; ++k) {
    const double h = 5.0 * k / 200.0;
    const double c = spherical_cov({0.0, 0.0}, {h, 0.0}, 5.0);
    CHECK(c <= prev + 1e-15);
    prev = c;
  }
}

TEST_CASE("anisotropy map scales the minor axis") {
  const AnisotropyMap m{std::numbers::pi / 2.0, 0.5};
  const Point r = m.apply({0.0, 1.0});
  CHECK(r.x == doctest::Approx(1.0));
  CHECK(r.y == doctest::Approx(0.0).epsilon(1e-15));
  const Point q = m.apply({1.0, 0.0});
  CHECK(std::hypot(q.x, q.y) == doctest::Approx(0.5));
}

TEST_CASE("covariance assembly") {
  const Grid g(2, 2, 2.0, 2.0);
  const auto c1 = build_covariance(g, 2.0, 0.0, 1.0, 1.0);
  CHECK(c1.matrix().diagonal().isApproxToConstant(1.0));
  CHECK(c1.matrix()(0, 1) == doctest::Approx(0.3125).epsilon(1e-15));
  CHECK(c1.matrix()(1, 0) == c1.matrix()(0, 1));
  const auto c100 = build_covariance(g, 2.0, 0.0, 1.0, 100.0);
  CHECK((c100.matrix() * 100.0 - c1.matrix()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(build_covariance(g, 0.0, 0.0, 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(build_covariance(g, 1.0, 0.0, 1.0, -1.0), ConfigError);
}

TEST_CASE("covariance products") {
  const Grid g(6, 5, 600.0, 500.0);
  const auto tiny = build_covariance(g, 10.0, 0.0, 1.0, 1.0);
  const Vector v = fixtures::random_vector(g.cell_count(), 3);
  CHECK((apply_cov(tiny, v) - v).norm() == 0.0);
  CHECK(apply_cov(tiny, Vector::Zero(g.cell_count())).norm() == 0.0);
  CHECK_THROWS_AS(apply_cov(tiny, Vector::Zero(3)), ConfigError);

  const auto c = build_covariance(g, 300.0, 0.4, 0.6, 2.0);
  Vector brute = Vector::Zero(g.cell_count());
  for (Index i = 0; i < g.cell_count(); ++i)
    for (Index j = 0; j < g.cell_count(); ++j)
      brute[i] += 0.5 * spherical_cov(g.center(i), g.center(j), 300.0, {0.4, 0.6}) * v[j];
  CHECK((apply_cov(c, v) - brute).norm() <= 1e-12 * brute.norm());

  const Vector w = fixtures::random_vector(g.cell_count(), 4);
  const Vector lhs = apply_cov(c, 2.5 * v + w);
  const Vector rhs = 2.5 * apply_cov(c, v) + apply_cov(c, w);
  CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());

  const double tr = c.matrix().trace();
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const Vector x = fixtures::random_vector(g.cell_count(), seed);
    CHECK(x.dot(apply_cov(c, x)) >= -1e-10 * x.squaredNorm() * tr / g.cell_count());
  }
}

TEST_CASE("square-root factor reproduces the covariance") {
  const Grid g(5, 5, 500.0, 500.0);
  const auto c = build_covariance(g, 350.0, 0.0, 1.0, 1.0);
  Matrix s(g.cell_count(), g.cell_count());
  for (Index j = 0; j < g.cell_count(); ++j) s.col(j) = c.apply_sqrt(Vector::Unit(g.cell_count(), j));
  CHECK((s * s.transpose() - c.matrix()).norm() <= 1e-12 * c.matrix().norm());
  const Vector v = fixtures::random_vector(g.cell_count(), 5);
  CHECK((c.matrix() * c.solve(v) - v).norm() <= 1e-9 * v.norm());
}

TEST_CASE("field sampling") {
  const Grid g(4, 4, 400.0, 400.0);
  const Field mean(g, -28.0);
  const auto frozen = build_covariance(g, 200.0, 0.0, 1.0, 1e12);
  const Field s0 = sample_field(frozen, mean, 1);
  CHECK((s0.values() - mean.values()).cwiseAbs().maxCoeff() <= 1e-4);

  const auto c = build_covariance(g, 200.0, 0.0, 1.0, 1.0);
  const Field a = sample_field(c, mean, 42);
  const Field b = sample_field(c, mean, 42);
  CHECK(a.values() == b.values());
  CHECK(a.values() != sample_field(c, mean, 43).values());
}

TEST_CASE("sample covariance matches the prior") {
  const Grid g(2, 2, 2.0, 2.0);
  const auto c = build_covariance(g, 2.0, 0.0, 1.0, 1.0);
  const Field zero(g, 0.0);
  constexpr int count = 10000;
  Matrix acc = Matrix::Zero(4, 4);
  for (int k = 0; k < count; ++k) {
    const Vector x = sample_field(c, zero, 1000 + k).values();
    acc += x * x.transpose();
  }
  acc /= count;
  CHECK((acc - c.matrix()).cwiseAbs().maxCoeff() <= 0.05 * c.matrix().cwiseAbs().maxCoeff());
}
