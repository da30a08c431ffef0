#include "resinv/grid_model.hpp"

#include "resinv/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace resinv {

Grid::Grid(int nx, int ny, double lx, double ly, double thickness)
    : nx_(nx), ny_(ny), lx_(lx), ly_(ly), thickness_(thickness) {
  if (nx < 2 || ny < 2) throw ConfigError("grid: nx and ny must be at least 2");
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
    throw ConfigError("grid: domain lengths must be positive");
  if (!(thickness > 0.0) || !std::isfinite(thickness))
    throw ConfigError("grid: thickness must be positive");
}

Point Grid::center(Index cell) const noexcept {
  return {(ix(cell) + 0.5) * dx(), (iy(cell) + 0.5) * dy()};
}

bool Grid::contains(Point p) const noexcept {
  return p.x >= 0.0 && p.x <= lx_ && p.y >= 0.0 && p.y <= ly_;
}

Index cell_of(const Grid& grid, Point p) {
  if (!grid.contains(p)) {
    std::ostringstream msg;
    msg << "cell_of: point (" << p.x << ", " << p.y << ") is outside the domain";
    throw ConfigError(msg.str());
  }
  const int ix = std::min(static_cast<int>(std::floor(p.x / grid.dx())), grid.nx() - 1);
  const int iy = std::min(static_cast<int>(std::floor(p.y / grid.dy())), grid.ny() - 1);
  return grid.index(ix, iy);
}

Field::Field(Grid grid) : grid_(grid), values_(Vector::Zero(grid.cell_count())) {}

Field::Field(Grid grid, Vector values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.cell_count())
    throw ConfigError("field: value count does not match grid cell count");
}

Field::Field(Grid grid, double constant)
    : grid_(grid), values_(Vector::Constant(grid.cell_count(), constant)) {}

const char* to_string(WellKind kind) noexcept {
  return kind == WellKind::injector ? "injector" : "producer";
}

double WellSpec::rate(std::size_t report_interval) const {
  if (rates.empty()) throw ConfigError("well " + name + ": empty rate schedule");
  if (rates.size() == 1) return rates.front();
  if (report_interval >= rates.size())
    throw ConfigError("well " + name + ": rate schedule shorter than report schedule");
  return rates[report_interval];
}

double peaceman_geometric_index(const Grid& grid, double well_radius,
                                double equivalent_radius_factor) {
  const double r_e = equivalent_radius_factor * grid.dx();
  if (!(well_radius > 0.0) || !(r_e > well_radius))
    throw ConfigError("well index: equivalent radius must exceed the well radius");
  return 2.0 * std::numbers::pi * grid.thickness() / std::log(r_e / well_radius);
}

void ReservoirModel::validate() const {
  const PhysicalParams& ph = physics;
  if (!(ph.mu_w > 0.0) || !(ph.mu_o > 0.0)) throw ConfigError("physics: viscosities must be positive");
  if (!(ph.a_w > 0.0 && ph.a_w <= 1.0) || !(ph.a_o > 0.0 && ph.a_o <= 1.0))
    throw ConfigError("physics: relative permeability endpoints must lie in (0,1]");
  if (ph.s_iw < 0.0 || ph.s_or < 0.0 || !(ph.s_iw + ph.s_or < 1.0))
    throw ConfigError("physics: need s_iw, s_or >= 0 and s_iw + s_or < 1");
  if (ph.s0 < ph.s_iw || ph.s0 > 1.0 - ph.s_or)
    throw ConfigError("physics: initial saturation outside [s_iw, 1 - s_or]");
  if (ph.porosity.size() != grid.cell_count())
    throw ConfigError("physics: porosity must have one value per cell");
  if (!((ph.porosity.array() > 0.0).all() && (ph.porosity.array() < 1.0).all()))
    throw ConfigError("physics: porosity values must lie in (0,1)");
  if (!std::isfinite(ph.p0)) throw ConfigError("physics: p0 must be finite");

  const Schedule& sc = schedule;
  if (sc.report_times.empty()) throw ConfigError("schedule: no report times");
  if (!(sc.max_dt > 0.0)) throw ConfigError("schedule: max_dt must be positive");
  if (!(sc.cfl > 0.0 && sc.cfl <= 1.0)) throw ConfigError("schedule: cfl must lie in (0,1]");
  double prev = 0.0;
  for (double t : sc.report_times) {
    if (!(t > prev)) throw ConfigError("schedule: report times must be positive and strictly increasing");
    prev = t;
  }
  if (prev > sc.total_time * (1.0 + 1e-12)) throw ConfigError("schedule: last report time exceeds total time");

  if (wells.empty()) throw ConfigError("wells: no wells defined");
  const std::size_t intervals = sc.report_times.size();
  for (const WellSpec& w : wells) {
    if (!grid.contains(w.location)) throw ConfigError("well " + w.name + ": location outside domain");
    if (!(w.well_index > 0.0)) throw ConfigError("well " + w.name + ": well index must be positive");
    if (w.rates.size() != 1 && w.rates.size() != intervals)
      throw ConfigError("well " + w.name + ": rate schedule needs 1 or one-per-report entries");
    for (double q : w.rates) {
      if (w.kind == WellKind::injector && !(q >= 0.0))
        throw ConfigError("well " + w.name + ": injector rates must be non-negative");
      if (w.kind == WellKind::producer && !(q <= 0.0))
        throw ConfigError("well " + w.name + ": producer rates must be non-positive");
    }
  }
}

std::vector<std::size_t> ReservoirModel::injectors() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < wells.size(); ++i)
    if (wells[i].kind == WellKind::injector) out.push_back(i);
  return out;
}

std::vector<std::size_t> ReservoirModel::producers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < wells.size(); ++i)
    if (wells[i].kind == WellKind::producer) out.push_back(i);
  return out;
}

Index ReservoirModel::observations_per_report() const {
  return static_cast<Index>(injectors().size() + 2 * producers().size());
}

Index ReservoirModel::observation_count() const {
  return observations_per_report() * static_cast<Index>(schedule.report_times.size());
}

double ReservoirModel::total_pore_volume() const {
  return physics.porosity.sum() * grid.cell_volume();
}

Schedule uniform_schedule(double total_time, int report_count, double max_dt, double cfl) {
  if (report_count < 1) throw ConfigError("schedule: report count must be positive");
  Schedule s;
  s.total_time = total_time;
  s.max_dt = max_dt;
  s.cfl = cfl;
  for (int n = 1; n <= report_count; ++n) s.report_times.push_back(total_time * n / report_count);
  s.report_times.back() = total_time;
  return s;
}

}  // namespace resinv
