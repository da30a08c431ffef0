#pragma once

// Internal finite-volume machinery shared by the forward simulator, the
// tangent-linear model and the adjoint.

#include "resinv/grid_model.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cstdint>
#include <vector>

namespace resinv::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Interior face between cells a and b; positive flux runs from a to b.
/// `geom` is thickness * (face length) / (centre distance).
struct Face {
  Index a;
  Index b;
  double geom;
};

struct WellCell {
  Index cell;
  std::size_t well;
};

/// Mobility terms and their saturation derivatives at one saturation value.
struct MobilityTerms {
  double lam_w;
  double lam_t;
  double dlam_w;
  double dlam_t;
  double f;   // lam_w / lam_t
  double df;  // d f / d s
};

MobilityTerms mobility_terms(double s, const PhysicalParams& ph);

/// max over [s_iw, 1 - s_or] of d f / d s.
double max_fractional_flow_slope(const PhysicalParams& ph);

class Discretization {
 public:
  Discretization(const Grid& grid, const PhysicalParams& physics, const std::vector<WellSpec>& wells);

  const Grid& grid() const noexcept { return grid_; }
  const PhysicalParams& physics() const noexcept { return physics_; }
  const std::vector<WellSpec>& wells() const noexcept { return wells_; }
  const std::vector<Face>& faces() const noexcept { return faces_; }
  const std::vector<WellCell>& well_cells() const noexcept { return well_cells_; }
  /// phi_i * V for every cell.
  const Vector& pore_volume() const noexcept { return pore_volume_; }
  Index cell_count() const noexcept { return grid_.cell_count(); }
  double max_flow_slope() const noexcept { return max_flow_slope_; }

  /// Per-cell injection (>= 0) and production (<= 0) rates for an interval.
  Vector injection(std::size_t interval) const;
  Vector production(std::size_t interval) const;
  /// Net volumetric source per cell; throws NumericalError on rate imbalance.
  Vector sources(std::size_t interval) const;

  /// Faces adjacent to each cell (indices into faces()).
  const std::vector<std::vector<std::size_t>>& cell_faces() const noexcept { return cell_faces_; }

 private:
  Grid grid_;
  PhysicalParams physics_;
  std::vector<WellSpec> wells_;
  std::vector<Face> faces_;
  std::vector<WellCell> well_cells_;
  std::vector<std::vector<std::size_t>> cell_faces_;
  Vector pore_volume_;
  double max_flow_slope_;
};

/// Per-cell and per-face coefficients that depend on (u, s) only.
struct TransmissibilityTerms {
  Vector perm;   // exp(u)
  Vector mob;    // lam_t * exp(u)
  Vector lam_t;
  Vector dlam_t;
  Vector trans;  // per face
  Vector h_a;    // d harmonic / d mob_a
  Vector h_b;
};

TransmissibilityTerms transmissibility_terms(const Discretization& disc, const Vector& u,
                                             const Vector& s);

/// The mean-pinned Neumann pressure solve  A(T) p = b,  mean(p) = p0.
/// Cell 0 is eliminated so the reduced matrix is SPD; the returned solution
/// of solve() has zero mean.
class PressureSystem {
 public:
  explicit PressureSystem(const Discretization& disc);

  void factorize(const Vector& trans);
  /// Zero-mean x with A x = r (r must sum to zero for a consistent system).
  Vector solve(const Vector& r) const;
  /// Applies the transpose of the solve map in place to columns
  /// [first_col, cols) of y.
  void solve_transpose(RowMatrix& y, Index first_col = 0) const;

  /// A(T) x, the per-cell net outflow.
  static Vector apply(const Discretization& disc, const Vector& trans, const Vector& x);

 private:
  void solve_reduced_block(RowMatrix& x) const;

  Index n_;
  Eigen::SparseMatrix<double> reduced_;
  struct Slots {
    std::ptrdiff_t aa, bb, ab, ba;
  };
  std::vector<Slots> slots_;
  std::vector<Face> faces_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

/// Flux-dependent stage quantities given a pressure field.
struct FluxTerms {
  Vector flux;       // T (p_a - p_b)
  Vector f_up;       // fractional flow of the upwind cell
  Vector df_up;
  std::vector<std::uint8_t> upwind_a;  // 1 if cell a is upwind
  Vector outflow;    // sum of outgoing face fluxes plus production
  Vector f_cell;
  Vector df_cell;
};

FluxTerms flux_terms(const Discretization& disc, const TransmissibilityTerms& tt, const Vector& p,
                     const Vector& s, const Vector& production);

/// Net water inflow rate per cell (face transport plus wells).
Vector water_residual(const Discretization& disc, const FluxTerms& ft, const Vector& injection,
                      const Vector& production);

}  // namespace resinv::detail
