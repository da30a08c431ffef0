#pragma once

#include "resinv/grid_model.hpp"

#include <random>
#include <string>
#include <vector>

namespace fixtures {

using namespace resinv;

inline constexpr double day = 86400.0;
inline constexpr double year = 365.0 * day;

inline PhysicalParams physics_for(const Grid& g, double porosity = 0.2) {
  PhysicalParams ph;
  ph.porosity = Vector::Constant(g.cell_count(), porosity);
  return ph;
}

inline WellSpec well(const std::string& name, WellKind kind, Point at, double rate, const Grid& g) {
  WellSpec w;
  w.name = name;
  w.kind = kind;
  w.location = at;
  w.rates = {rate};
  w.well_index = peaceman_geometric_index(g, 0.1, 0.2);
  return w;
}

/// One injector and one producer on opposite corners' diagonal.
inline ReservoirModel two_well_model(int n, int reports, double total_time, double rate = 2.6e3 / day,
                                     double length = 2000.0, double thickness = 100.0) {
  const Grid g(n, n, length, length, thickness);
  ReservoirModel m{g, physics_for(g), {}, uniform_schedule(total_time, reports, total_time)};
  m.wells.push_back(well("I1", WellKind::injector, {0.2 * length, 0.2 * length}, rate, g));
  m.wells.push_back(well("P1", WellKind::producer, {0.8 * length, 0.8 * length}, -rate, g));
  return m;
}

inline Vector random_vector(Index n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

inline Field log_perm(const Grid& g, std::uint64_t seed, double spread = 0.5) {
  const double mean = std::log(500.0 * 9.869233e-16);
  Vector v = random_vector(g.cell_count(), seed, spread);
  v.array() += mean;
  return Field(g, v);
}

}  // namespace fixtures
