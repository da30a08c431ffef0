#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <vector>

namespace resinv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform rectangular cell grid on [0,lx] x [0,ly]. Cells are numbered
/// row-major: index = iy * nx + ix. The model is two-dimensional; `thickness`
/// turns areal quantities into volumes.
class Grid {
 public:
  Grid(int nx, int ny, double lx, double ly, double thickness = 1.0);

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double lx() const noexcept { return lx_; }
  double ly() const noexcept { return ly_; }
  double dx() const noexcept { return lx_ / nx_; }
  double dy() const noexcept { return ly_ / ny_; }
  double thickness() const noexcept { return thickness_; }
  Index cell_count() const noexcept { return Index{nx_} * ny_; }
  double cell_volume() const noexcept { return dx() * dy() * thickness_; }

  Index index(int ix, int iy) const noexcept { return Index{iy} * nx_ + ix; }
  int ix(Index cell) const noexcept { return static_cast<int>(cell % nx_); }
  int iy(Index cell) const noexcept { return static_cast<int>(cell / nx_); }
  Point center(Index cell) const noexcept;

  bool contains(Point p) const noexcept;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int nx_;
  int ny_;
  double lx_;
  double ly_;
  double thickness_;
};

/// Index of the cell containing `p`. Points on an interior cell edge belong to
/// the cell on the upper/right side; points on the outer boundary belong to the
/// adjacent cell. Throws ConfigError if `p` lies outside the domain.
Index cell_of(const Grid& grid, Point p);

/// One scalar per cell (log-permeability, pressure or saturation).
class Field {
 public:
  explicit Field(Grid grid);
  Field(Grid grid, Vector values);
  Field(Grid grid, double constant);

  const Grid& grid() const noexcept { return grid_; }
  const Vector& values() const noexcept { return values_; }
  Vector& values() noexcept { return values_; }
  Index size() const noexcept { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }
  double& operator[](Index i) { return values_[i]; }

  bool all_finite() const noexcept { return values_.allFinite(); }

 private:
  Grid grid_;
  Vector values_;
};

enum class WellKind { injector, producer };

const char* to_string(WellKind kind) noexcept;

/// A rate-controlled well. `rates` holds the signed total volumetric rate
/// (m^3/s, injectors >= 0, producers <= 0) for each report interval;
/// a single entry means the rate is constant in time.
struct WellSpec {
  std::string name;
  WellKind kind = WellKind::injector;
  Point location;
  std::vector<double> rates;
  /// Geometric Peaceman factor 2*pi*h/ln(r_e/r_w) in metres. The bottom-hole
  /// pressure uses well_index * exp(u_cell) as the full well index.
  double well_index = 1.0;

  double rate(std::size_t report_interval) const;
};

/// 2*pi*h / ln(r_e / r_w) with r_e = equivalent_radius_factor * dx.
double peaceman_geometric_index(const Grid& grid, double well_radius,
                                double equivalent_radius_factor);

struct PhysicalParams {
  double mu_w = 5.0e-4;
  double mu_o = 1.0e-2;
  double a_w = 0.3;
  double a_o = 0.9;
  double s_iw = 0.2;
  double s_or = 0.2;
  Vector porosity;  // one value per cell
  double p0 = 2.5e7;
  double s0 = 0.2;
  /// Listed bottom-hole pressure target; no well is pressure controlled, so
  /// the simulator never reads it.
  double p_bh = 2.7e7;
};

struct Schedule {
  double total_time = 0.0;          // s
  std::vector<double> report_times;  // s, strictly increasing, last <= total_time
  double max_dt = 0.0;              // s
  double cfl = 0.5;
};

/// Everything the forward simulator needs besides the log-permeability.
struct ReservoirModel {
  Grid grid;
  PhysicalParams physics;
  std::vector<WellSpec> wells;
  Schedule schedule;

  /// Throws ConfigError describing the first violated invariant.
  void validate() const;

  std::vector<std::size_t> injectors() const;
  std::vector<std::size_t> producers() const;
  Index observations_per_report() const;
  Index observation_count() const;
  double total_pore_volume() const;
};

Schedule uniform_schedule(double total_time, int report_count, double max_dt, double cfl = 0.5);

}  // namespace resinv
