#include "resinv/geostat.hpp"

#include "resinv/error.hpp"

#include <cmath>
#include <random>

namespace resinv {

Point AnisotropyMap::apply(Point v) const noexcept {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x + s * v.y, axis_ratio * (-s * v.x + c * v.y)};
}

double spherical_cov(Point z1, Point z2, double range, const AnisotropyMap& map) {
  const Point d = map.apply({z1.x - z2.x, z1.y - z2.y});
  const double h = std::hypot(d.x, d.y);
  if (h >= range) return 0.0;
  const double r = h / range;
  return 1.0 - 1.5 * r + 0.5 * r * r * r;
}

CovarianceOperator::CovarianceOperator(const Grid& grid, double range, AnisotropyMap map,
                                       double kappa)
    : grid_(grid), range_(range), map_(map), kappa_(kappa) {
  if (!(range > 0.0)) throw ConfigError("covariance: range must be positive");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("covariance: kappa must be positive");
  if (!(map.axis_ratio > 0.0)) throw ConfigError("covariance: axis ratio must be positive");

  const Index n = grid.cell_count();
  matrix_.resize(n, n);
  const double scale = 1.0 / kappa;
  for (Index j = 0; j < n; ++j) {
    const Point zj = grid.center(j);
    matrix_(j, j) = scale;
    for (Index i = j + 1; i < n; ++i) {
      const double c = scale * spherical_cov(grid.center(i), zj, range, map);
      matrix_(i, j) = c;
      matrix_(j, i) = c;
    }
  }

  factorize("build_covariance");
}

CovarianceOperator::CovarianceOperator(Matrix matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0)
    throw ConfigError("covariance: matrix must be square and non-empty");
  if ((matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * matrix_.cwiseAbs().maxCoeff())
    throw ConfigError("covariance: matrix must be symmetric");
  factorize("covariance");
}

void CovarianceOperator::factorize(const char* operation) {
  ldlt_.compute(matrix_);
  if (ldlt_.info() != Eigen::Success)
    throw NumericalError("geostat", operation, "LDL^T factorization failed");
  const Vector d = ldlt_.vectorD();
  const double tol = -1e-10 * matrix_.trace();
  if (d.minCoeff() < tol)
    throw NumericalError("geostat", operation,
                         "covariance is indefinite beyond tolerance; check range against grid");
  sqrt_d_ = d.cwiseMax(0.0).cwiseSqrt();
}

const Grid& CovarianceOperator::grid() const {
  if (!grid_) throw ConfigError("covariance: operator was built from a matrix and has no grid");
  return *grid_;
}

Vector CovarianceOperator::apply(const Vector& v) const {
  if (v.size() != size()) throw ConfigError("apply_cov: dimension mismatch");
  return matrix_ * v;
}

Matrix CovarianceOperator::apply(const Matrix& x) const {
  if (x.rows() != size()) throw ConfigError("apply_cov: dimension mismatch");
  return matrix_ * x;
}

Vector CovarianceOperator::apply_sqrt(const Vector& xi) const {
  if (xi.size() != size()) throw ConfigError("covariance: dimension mismatch");
  // C = P^T L D L^T P, so S = P^T L D^{1/2}.
  Vector w = sqrt_d_.cwiseProduct(xi);
  w = ldlt_.matrixL() * w;
  return ldlt_.transpositionsP().transpose() * w;
}

Vector CovarianceOperator::solve(const Vector& v) const {
  if (v.size() != size()) throw ConfigError("covariance: dimension mismatch");
  if (sqrt_d_.minCoeff() <= 0.0)
    throw NumericalError("geostat", "solve", "covariance is singular");
  return ldlt_.solve(v);
}

double CovarianceOperator::inverse_norm_squared(const Vector& v) const {
  return v.dot(solve(v));
}

CovarianceOperator build_covariance(const Grid& grid, double range, double angle,
                                    double axis_ratio, double kappa) {
  return CovarianceOperator(grid, range, AnisotropyMap{angle, axis_ratio}, kappa);
}

Vector apply_cov(const CovarianceOperator& op, const Vector& v) { return op.apply(v); }

Field sample_field(const CovarianceOperator& op, const Field& mean, std::uint64_t seed) {
  if (mean.size() != op.size()) throw ConfigError("sample_field: mean does not match covariance size");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector xi(op.size());
  for (Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);
  return Field(mean.grid(), mean.values() + op.apply_sqrt(xi));
}

}  // namespace resinv
