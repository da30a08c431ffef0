#pragma once

#include "resinv/geostat.hpp"
#include "resinv/grid_model.hpp"
#include "resinv/simulator.hpp"

#include <filesystem>
#include <memory>

namespace resinv {

enum class SensitivityMethod { adjoint, finite_difference, exact };

const char* to_string(SensitivityMethod method) noexcept;

/// Dense linearization DG at a base point (N x n, observation units per
/// log-permeability unit).
class SensitivityOperator {
 public:
  SensitivityOperator(Vector base, Matrix jacobian, SensitivityMethod method);

  const Vector& base() const noexcept { return base_; }
  const Matrix& jacobian() const noexcept { return jacobian_; }
  SensitivityMethod method() const noexcept { return method_; }
  Index rows() const noexcept { return jacobian_.rows(); }
  Index cols() const noexcept { return jacobian_.cols(); }

  /// DG v
  Vector apply(const Vector& v) const;
  /// DG^T w
  Vector apply_adjoint(const Vector& w) const;

 private:
  Vector base_;
  Matrix jacobian_;
  SensitivityMethod method_;
};

struct Linearization {
  Vector value;  // G(u)
  SensitivityOperator sensitivity;
};

/// Parameter-to-observation map used by both inversion schemes.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;
  virtual Index parameter_size() const = 0;
  virtual Index observation_size() const = 0;
  /// Must be safe to call concurrently.
  virtual Vector evaluate(const Vector& u) const = 0;
  virtual Linearization linearize(const Vector& u) const = 0;
};

/// G(u) = B u + offset.
class LinearForwardModel final : public ForwardModel {
 public:
  explicit LinearForwardModel(Matrix b, Vector offset = {});

  Index parameter_size() const override { return b_.cols(); }
  Index observation_size() const override { return b_.rows(); }
  Vector evaluate(const Vector& u) const override;
  Linearization linearize(const Vector& u) const override;
  const Matrix& matrix() const noexcept { return b_; }

 private:
  Matrix b_;
  Vector offset_;
};

/// The reservoir simulator as a forward map.
class ReservoirForwardModel final : public ForwardModel {
 public:
  ReservoirForwardModel(ReservoirModel model, SensitivityMethod method = SensitivityMethod::adjoint,
                        double fd_step = 1e-6, int threads = 1);

  Index parameter_size() const override { return model_.grid.cell_count(); }
  Index observation_size() const override { return model_.observation_count(); }
  Vector evaluate(const Vector& u) const override;
  Linearization linearize(const Vector& u) const override;
  const ReservoirModel& model() const noexcept { return model_; }

 private:
  ReservoirModel model_;
  SensitivityMethod method_;
  double fd_step_;
  int threads_;
};

/// Central differences (G(u + h e_j) - G(u - h e_j)) / 2h, columns spread
/// over `threads` workers. Simulator failures are rethrown with the column
/// index attached.
SensitivityOperator jacobian_fd(const ForwardModel& model, const Vector& u, double h = 1e-6,
                                int threads = 1);

/// Discrete adjoint of the IMPES scheme, sweeping backward through the
/// trajectory stored in `forward` (which must come from simulate(u, model)
/// with keep_trajectory). All observations share one backward sweep.
SensitivityOperator jacobian_adjoint(const Field& u, const ReservoirModel& model,
                                     const SimulationResult& forward);
SensitivityOperator jacobian_adjoint(const Field& u, const ReservoirModel& model);

/// DG v by forward (tangent-linear) differentiation of the same discrete
/// scheme.
Vector tangent_linear(const Field& u, const ReservoirModel& model, const SimulationResult& forward,
                      const Vector& v);

struct SensitivityProducts {
  Matrix c_dgt;     // C DG^T, n x N
  Matrix dg_c_dgt;  // DG C DG^T, N x N, symmetrized
};

SensitivityProducts assemble_products(const SensitivityOperator& s, const CovarianceOperator& c);

/// Binary dump: "RSJ1", uint64 rows, uint64 cols, then row-major doubles.
void write_jacobian(const std::filesystem::path& path, const SensitivityOperator& s);
Matrix read_jacobian(const std::filesystem::path& path);

}  // namespace resinv
