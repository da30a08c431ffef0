#include "resinv/checks.hpp"

#include <algorithm>
#include <random>

namespace resinv {

namespace {

Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

Matrix spd(Index n, std::mt19937_64& rng) {
  const Matrix a = gaussian(n, n, rng);
  return a * a.transpose() / static_cast<double>(n) + 0.2 * Matrix::Identity(n, n);
}

CheckResult make(std::string name, double value, double tolerance) {
  return {std::move(name), value <= tolerance, value, tolerance};
}

/// Worst relative gap between the data-space update formulas and dense
/// parameter-space solves over `count` random instances.
std::pair<double, double> update_equivalence(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> nx(2, 50);
  std::uniform_int_distribution<Index> ny(1, 10);
  double reg_gap = 0.0;
  double std_gap = 0.0;
  for (int k = 0; k < count; ++k) {
    const Index n = nx(rng);
    const Index m = ny(rng);
    const Matrix dg = gaussian(m, n, rng);
    const Matrix c = spd(n, rng);
    const Matrix g = 0.1 * spd(m, rng);
    const Vector d = gaussian(m, 1, rng).col(0);
    const Vector u = gaussian(n, 1, rng).col(0);
    const Vector ubar = gaussian(n, 1, rng).col(0);
    const double alpha = std::pow(10.0, static_cast<double>(k % 7) - 3.0);
    const double lambda = std::pow(10.0, static_cast<double>(k % 6) - 2.0);

    const SensitivityOperator s(u, dg, SensitivityMethod::exact);
    const CovarianceOperator cov(c);
    const DataCovariance gamma(g);
    const SensitivityProducts p = assemble_products(s, cov);
    const Matrix gi = g.ldlt().solve(Matrix::Identity(m, m));
    const Matrix ci = c.ldlt().solve(Matrix::Identity(n, n));
    const Matrix normal = dg.transpose() * gi * dg;

    const Vector reg_dual = reg_lm_increment(p, gamma, d, alpha);
    const Vector reg_primal = (normal + alpha * ci).ldlt().solve(dg.transpose() * gi * d);
    reg_gap = std::max(reg_gap, (reg_dual - reg_primal).norm() / reg_primal.norm());

    const Vector std_dual = std_lm_increment(u, ubar, d, s, p, gamma, lambda);
    const Vector std_primal =
        (normal + (1.0 + lambda) * ci).ldlt().solve(dg.transpose() * gi * d - ci * (u - ubar));
    std_gap = std::max(std_gap, (std_dual - std_primal).norm() / std_primal.norm());
  }
  return {reg_gap, std_gap};
}

}  // namespace

std::vector<CheckResult> run_invariant_checks(const ExperimentSetup& setup) {
  std::vector<CheckResult> out;
  const ReservoirModel& model = setup.model;
  const TruthCase truth = make_truth(setup);
  const Field u(model.grid, truth.truth);
  const SimulationResult run = simulate(u, model);
  const SimulationDiagnostics& dg = run.diagnostics;

  out.push_back(make("pressure residual", dg.max_pressure_residual, 1e-10));
  out.push_back(make("water balance", dg.max_water_imbalance, 1e-10));
  const double lo = model.physics.s_iw - dg.min_saturation;
  const double hi = dg.max_saturation - (1.0 - model.physics.s_or);
  out.push_back(make("saturation bounds", std::max({lo, hi, 0.0}), 1e-8));
  out.push_back(make("pre-clamp violation", dg.max_clamp_violation, 1e-6));

  double split = 0.0;
  const auto& layout = run.observations.layout;
  const auto np = static_cast<Index>(model.producers().size());
  for (Index i = 0; i < run.observations.size(); ++i) {
    const ObservationEntry& e = layout[static_cast<std::size_t>(i)];
    if (e.kind != ObservationKind::water_rate) continue;
    const double q = std::abs(model.wells[e.well].rate(e.report));
    const double total = run.observations.values[i] + run.observations.values[i + np];
    split = std::max(split, std::abs(total - q) / q);
  }
  out.push_back(make("producer rate split", split, 1e-12));

  std::mt19937_64 rng(setup.truth_seed + 17);
  const Vector v = gaussian(u.size(), 1, rng).col(0);
  const Vector w = gaussian(run.observations.size(), 1, rng).col(0);
  const SensitivityOperator adj = jacobian_adjoint(u, model, run);
  const Vector jv = tangent_linear(u, model, run, v);
  const double lhs = w.dot(jv);
  const double rhs = adj.apply_adjoint(w).dot(v);
  out.push_back(make("adjoint identity", std::abs(lhs - rhs) / w.cwiseAbs().dot(jv.cwiseAbs()), 1e-12));

  const NoiseModel scale = build_gamma(run.observations, model, 1.0);
  const double h = 1e-6;
  const Vector gp = simulate(Field(model.grid, truth.truth + h * v), model, {false, false}).observations.values;
  const Vector gm = simulate(Field(model.grid, truth.truth - h * v), model, {false, false}).observations.values;
  const Vector fd = ((gp - gm) / (2.0 * h)).cwiseQuotient(scale.sigma);
  const Vector an = adj.apply(v).cwiseQuotient(scale.sigma);
  out.push_back(make("directional finite difference", (fd - an).norm() / an.norm(), 1e-4));

  const auto [reg_gap, std_gap] = update_equivalence(200, setup.truth_seed + 29);
  out.push_back(make("regularizing update equivalence", reg_gap, 1e-8));
  out.push_back(make("standard update equivalence", std_gap, 1e-8));
  return out;
}

}  // namespace resinv
