#pragma once

#include "resinv/geostat.hpp"
#include "resinv/reg_lm.hpp"
#include "resinv/sensitivity.hpp"

#include <Eigen/Dense>

#include <random>

namespace support {

using namespace resinv;

inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = d(rng);
  return m;
}

/// Random SPD matrix with eigenvalues bounded away from zero.
inline Matrix random_spd(Index n, std::mt19937_64& rng, double scale = 1.0) {
  const Matrix a = gaussian_matrix(n, n, rng);
  Matrix s = a * a.transpose() / static_cast<double>(n) + 0.2 * Matrix::Identity(n, n);
  s = 0.5 * (s + s.transpose());
  return scale * s;
}

/// A linearized inverse problem: DG (N x n), SPD C and Gamma, residual d,
/// current iterate u and prior mean ubar.
struct LinearizedInstance {
  Matrix dg;
  Matrix c;
  Matrix gamma;
  Vector d;
  Vector u;
  Vector ubar;
};

inline LinearizedInstance random_instance(std::uint64_t seed, Index max_x = 50, Index max_y = 10) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> nx(2, max_x);
  std::uniform_int_distribution<Index> ny(1, max_y);
  const Index n = nx(rng);
  const Index m = ny(rng);
  LinearizedInstance inst;
  inst.dg = gaussian_matrix(m, n, rng);
  inst.c = random_spd(n, rng);
  inst.gamma = random_spd(m, rng, 0.1);
  inst.d = gaussian_matrix(m, 1, rng).col(0);
  inst.u = gaussian_matrix(n, 1, rng).col(0);
  inst.ubar = gaussian_matrix(n, 1, rng).col(0);
  return inst;
}

/// [DG^T Gamma^{-1} DG + alpha C^{-1}]^{-1} DG^T Gamma^{-1} d, by dense solves.
inline Vector primal_reg_step(const LinearizedInstance& in, double alpha) {
  const Matrix gi_dg = in.gamma.ldlt().solve(in.dg);
  const Matrix ci = in.c.ldlt().solve(Matrix::Identity(in.c.rows(), in.c.cols()));
  const Matrix h = in.dg.transpose() * gi_dg + alpha * ci;
  return h.ldlt().solve(gi_dg.transpose() * in.d);
}

/// Solves [DG^T Gamma^{-1} DG + (1 + lambda) C^{-1}] du = DG^T Gamma^{-1} d - C^{-1}(u - ubar).
inline Vector primal_std_step(const LinearizedInstance& in, double lambda) {
  const Matrix gi_dg = in.gamma.ldlt().solve(in.dg);
  const Matrix ci = in.c.ldlt().solve(Matrix::Identity(in.c.rows(), in.c.cols()));
  const Matrix h = in.dg.transpose() * gi_dg + (1.0 + lambda) * ci;
  return h.ldlt().solve(gi_dg.transpose() * in.d - ci * (in.u - in.ubar));
}

}  // namespace support
