#pragma once

#include "resinv/grid_model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cstdint>
#include <optional>

namespace resinv {

/// Anisotropy map M = diag(1, axis_ratio) * R(angle), applied to separation
/// vectors before measuring distance against the range.
struct AnisotropyMap {
  double angle = 0.0;       // radians, direction of maximum continuity
  double axis_ratio = 1.0;  // > 0; 1 is isotropic

  Point apply(Point v) const noexcept;
};

/// Spherical covariance 1 - 1.5 h/a + 0.5 (h/a)^3 for h < a, else 0, with
/// h = |M (z1 - z2)|.
double spherical_cov(Point z1, Point z2, double range, const AnisotropyMap& map = {});

/// Dense prior covariance C = C0 / kappa over the cell centres of a grid,
/// with a pivoted LDL^T factor kept for square-root products, solves and
/// sampling. Immutable after construction.
class CovarianceOperator {
 public:
  CovarianceOperator(const Grid& grid, double range, AnisotropyMap map, double kappa);
  /// Wraps an explicit symmetric positive semi-definite matrix (no grid).
  explicit CovarianceOperator(Matrix matrix);

  bool has_grid() const noexcept { return grid_.has_value(); }
  /// Throws ConfigError for a matrix-only operator.
  const Grid& grid() const;
  double range() const noexcept { return range_; }
  const AnisotropyMap& anisotropy() const noexcept { return map_; }
  double kappa() const noexcept { return kappa_; }
  Index size() const noexcept { return matrix_.rows(); }
  const Matrix& matrix() const noexcept { return matrix_; }

  /// C v
  Vector apply(const Vector& v) const;
  /// C X for a block of columns.
  Matrix apply(const Matrix& x) const;
  /// S xi with S S^T = C.
  Vector apply_sqrt(const Vector& xi) const;
  /// C^{-1} v; throws NumericalError when C is singular to working precision.
  Vector solve(const Vector& v) const;
  /// |C^{-1/2} v|^2 = v^T C^{-1} v
  double inverse_norm_squared(const Vector& v) const;

 private:
  void factorize(const char* operation);

  std::optional<Grid> grid_;
  double range_ = 0.0;
  AnisotropyMap map_;
  double kappa_ = 1.0;
  Matrix matrix_;
  Eigen::LDLT<Matrix> ldlt_;
  Vector sqrt_d_;  // sqrt of the (clamped) LDL^T pivots
};

/// Assembles C with entries spherical_cov(center_i, center_j) / kappa.
/// Throws NumericalError if a pivot falls below -1e-10 * trace(C).
CovarianceOperator build_covariance(const Grid& grid, double range, double angle,
                                    double axis_ratio, double kappa);

/// Throws ConfigError on a length mismatch.
Vector apply_cov(const CovarianceOperator& op, const Vector& v);

/// mean + S xi where xi ~ N(0, I) from a 64-bit Mersenne twister seeded with
/// `seed`.
Field sample_field(const CovarianceOperator& op, const Field& mean, std::uint64_t seed);

}  // namespace resinv
