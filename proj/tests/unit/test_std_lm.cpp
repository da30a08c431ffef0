#include "random_instances.hpp"
#include "resinv/error.hpp"
#include "resinv/std_lm.hpp"

#include <doctest.h>

using namespace resinv;

namespace {

/// G(u) = B tanh(u), a mildly nonlinear map with an exact Jacobian.
class SquashModel final : public ForwardModel {
 public:
  explicit SquashModel(Matrix b) : b_(std::move(b)) {}
  Index parameter_size() const override { return b_.cols(); }
  Index observation_size() const override { return b_.rows(); }
  Vector evaluate(const Vector& u) const override { return b_ * u.array().tanh().matrix(); }
  Linearization linearize(const Vector& u) const override {
    const Vector t = u.array().tanh();
    const Vector dt = 1.0 - t.array().square();
    return {b_ * t, SensitivityOperator(u, b_ * dt.asDiagonal(), SensitivityMethod::exact)};
  }

 private:
  Matrix b_;
};

}  // namespace

TEST_CASE("objective values") {
  const CovarianceOperator one(Matrix::Constant(1, 1, 1.0));
  const DataCovariance g1(Matrix::Constant(1, 1, 1.0));
  const Vector zero = Vector::Zero(1);
  CHECK(objective_J(Vector::Constant(1, 1.0), Vector::Constant(1, 2.0), Vector::Constant(1, 1.0), g1, one,
                    zero) == doctest::Approx(1.0));
  CHECK(objective_J(zero, Vector::Constant(1, 3.0), Vector::Constant(1, 3.0), g1, one, zero) == 0.0);
  CHECK(objective_J(zero, Vector::Constant(1, 3.0), Vector::Constant(1, 1.0), g1, one, zero) ==
        doctest::Approx(2.0));
}

TEST_CASE("standard step") {
  SUBCASE("stationary point") {
    const auto in = support::random_instance(8);
    const SensitivityOperator s(in.ubar, in.dg, SensitivityMethod::exact);
    const CovarianceOperator c(in.c);
    const Vector g = Vector::Random(in.dg.rows());
    const Vector next = std_lm_step(in.ubar, in.ubar, g, g, s, c, DataCovariance(in.gamma), 2.0);
    CHECK((next - in.ubar).norm() <= 1e-14 * in.ubar.norm());
  }
  SUBCASE("infinite damping") {
    const auto in = support::random_instance(9);
    const SensitivityOperator s(in.u, in.dg, SensitivityMethod::exact);
    const SensitivityProducts p = assemble_products(s, CovarianceOperator(in.c));
    const DataCovariance gamma(in.gamma);
    const double big = std_lm_increment(in.u, in.ubar, in.d, s, p, gamma, 1e12).norm();
    const double small = std_lm_increment(in.u, in.ubar, in.d, s, p, gamma, 1.0).norm();
    CHECK(big <= 1e-9 * small);
  }
  SUBCASE("data-space and parameter-space forms agree") {
    for (std::uint64_t seed = 200; seed < 250; ++seed) {
      const auto in = support::random_instance(seed);
      const SensitivityOperator s(in.u, in.dg, SensitivityMethod::exact);
      const SensitivityProducts p = assemble_products(s, CovarianceOperator(in.c));
      const double lambda = std::pow(10.0, static_cast<double>(seed % 6) - 2.0);
      const Vector dual = std_lm_increment(in.u, in.ubar, in.d, s, p, DataCovariance(in.gamma), lambda);
      const Vector primal = support::primal_std_step(in, lambda);
      CHECK((dual - primal).norm() <= 1e-8 * primal.norm());
    }
  }
  SUBCASE("zero damping is the Gauss-Newton step") {
    const auto in = support::random_instance(31);
    const SensitivityOperator s(in.u, in.dg, SensitivityMethod::exact);
    const SensitivityProducts p = assemble_products(s, CovarianceOperator(in.c));
    const Matrix gi = in.gamma.inverse();
    const Matrix ci = in.c.inverse();
    const Matrix normal = in.dg.transpose() * gi * in.dg + ci;
    const Vector gn = normal.ldlt().solve(in.dg.transpose() * gi * in.d - ci * (in.u - in.ubar));
    const Vector step = std_lm_increment(in.u, in.ubar, in.d, s, p, DataCovariance(in.gamma), 0.0);
    CHECK((step - gn).norm() <= 1e-8 * gn.norm());
  }
}

TEST_CASE("lambda schedule") {
  CHECK(lambda_schedule(1.0, 0.5, 1.0) == doctest::Approx(0.1));
  CHECK(lambda_schedule(1.0, 1.0, 1.0) == 10.0);
  CHECK(lambda_schedule(1.0, 2.0, 1.0) == 10.0);
  CHECK(lambda_schedule(1e10, 2.0, 1.0, 1e-12, 1e10) == 1e10);
  CHECK(lambda_schedule(1e-12, 0.5, 1.0, 1e-12, 1e10) == 1e-12);
}

TEST_CASE("standard LM runs") {
  std::mt19937_64 rng(17);
  const Index n = 20;
  const Index m = 6;
  const Matrix b = support::gaussian_matrix(m, n, rng);
  const CovarianceOperator c(support::random_spd(n, rng));
  const DataCovariance gamma(support::random_spd(m, rng, 0.05));
  const Vector ubar = support::gaussian_matrix(n, 1, rng).col(0) * 0.3;

  SUBCASE("data generated by the prior mean") {
    const LinearForwardModel model(b);
    const InversionProblem p{model, c, gamma, b * ubar, ubar, std::nullopt};
    const auto r = run_std_lm(p, {});
    REQUIRE(r.converged);
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[1].stop_metric_j == 0.0);
    CHECK(r.records[1].stop_metric_u == 0.0);
  }

  SUBCASE("linear problem converges to the ridge solution") {
    const LinearForwardModel model(b);
    const Vector y = support::gaussian_matrix(m, 1, rng).col(0);
    const Matrix bcb = b * c.matrix() * b.transpose() + gamma.matrix();
    const Vector ridge = ubar + c.matrix() * b.transpose() * bcb.ldlt().solve(y - b * ubar);
    StdLMConfig cfg;
    cfg.eps0 = 1e-14;
    cfg.eps1 = 1e-10;
    cfg.max_iterations = 200;
    const InversionProblem p{model, c, gamma, y, ubar, std::nullopt};
    const auto r = run_std_lm(p, cfg);
    CHECK(r.converged);
    CHECK((r.u - ridge).norm() <= 1e-6 * ridge.norm());
  }

  SUBCASE("accepted objective values never increase and lambda follows the schedule") {
    const SquashModel model(3.0 * b);
    const Vector truth = support::gaussian_matrix(n, 1, rng).col(0);
    const Vector y = model.evaluate(truth);
    StdLMConfig cfg;
    cfg.lambda0 = 1e-3;
    cfg.max_iterations = 40;
    cfg.lambda_floor = 1e-6;
    cfg.lambda_cap = 1e3;
    const InversionProblem p{model, CovarianceOperator(Matrix(c.matrix() * 100.0)), gamma, y, ubar, truth};
    const auto r = run_std_lm(p, cfg);
    for (std::size_t k = 1; k < r.records.size(); ++k) {
      CHECK(r.records[k].objective <= r.records[k - 1].objective);
      if (k + 1 < r.records.size()) {
        const double lam = r.records[k].lambda;
        const double next = r.records[k + 1].lambda;
        const bool decreased = r.records[k].accepted && r.records[k].objective < r.records[k - 1].objective;
        const double expected = std::clamp(decreased ? lam / 10.0 : lam * 10.0, 1e-6, 1e3);
        CHECK(next == doctest::Approx(expected));
      }
    }
  }
}
