#include "resinv/io.hpp"

#include "resinv/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace resinv {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return in;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& s, const std::filesystem::path& path) {
  if (s == "nan") return std::nan("");
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(path.string() + ": '" + s + "' is not a number");
  return v;
}

bool next_row(std::istream& in, std::vector<std::string>& cells) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    cells = split(line);
    return true;
  }
  return false;
}

const char* unit_of(ObservationKind kind) { return kind == ObservationKind::bhp ? "Pa" : "bbl/day"; }

double to_report_units(ObservationKind kind, double v) {
  return kind == ObservationKind::bhp ? v : v * bbl_per_day_per_m3s;
}

double from_report_units(ObservationKind kind, double v) {
  return kind == ObservationKind::bhp ? v : v / bbl_per_day_per_m3s;
}

void check_name(const std::string& name) {
  if (name.find_first_of(",\n\r") != std::string::npos)
    throw ConfigError("well name '" + name + "' cannot be written to CSV");
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_field_csv(const std::filesystem::path& path, const Field& field) {
  const Grid& g = field.grid();
  auto out = open_out(path);
  out << "nx,ny,lx,ly\n"
      << g.nx() << ',' << g.ny() << ',' << format_number(g.lx()) << ',' << format_number(g.ly()) << '\n'
      << "ix,iy,x,y,value\n";
  for (Index c = 0; c < g.cell_count(); ++c) {
    const Point p = g.center(c);
    out << g.ix(c) << ',' << g.iy(c) << ',' << format_number(p.x) << ',' << format_number(p.y) << ','
        << format_number(field[c]) << '\n';
  }
}

Field read_field_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::string> row;
  if (!next_row(in, row) || row != std::vector<std::string>{"nx", "ny", "lx", "ly"})
    throw ConfigError(path.string() + ": missing nx,ny,lx,ly header");
  if (!next_row(in, row) || row.size() != 4) throw ConfigError(path.string() + ": malformed grid row");
  const Grid g(static_cast<int>(parse_number(row[0], path)), static_cast<int>(parse_number(row[1], path)),
               parse_number(row[2], path), parse_number(row[3], path));
  if (!next_row(in, row) || row.size() != 5 || row[4] != "value")
    throw ConfigError(path.string() + ": missing ix,iy,x,y,value header");
  Vector v(g.cell_count());
  Index n = 0;
  while (next_row(in, row)) {
    if (row.size() != 5) throw ConfigError(path.string() + ": malformed row " + std::to_string(n));
    if (n >= g.cell_count()) throw ConfigError(path.string() + ": more rows than cells");
    const auto ix = static_cast<int>(parse_number(row[0], path));
    const auto iy = static_cast<int>(parse_number(row[1], path));
    if (g.index(ix, iy) != n) throw ConfigError(path.string() + ": rows are not in row-major order");
    v[n++] = parse_number(row[4], path);
  }
  if (n != g.cell_count()) throw ConfigError(path.string() + ": fewer rows than cells");
  Field f(g, std::move(v));
  if (!f.all_finite()) throw ConfigError(path.string() + ": non-finite field value");
  return f;
}

void write_observations_csv(const std::filesystem::path& path, const ObservationVector& obs,
                            const ReservoirModel& model, const Vector* sigma) {
  if (static_cast<Index>(obs.layout.size()) != obs.size() || (sigma && sigma->size() != obs.size()))
    throw ConfigError("write_observations_csv: values, layout and sigma differ in length");
  auto out = open_out(path);
  out << "time,well,kind,value,unit" << (sigma ? ",sigma" : "") << '\n';
  for (Index i = 0; i < obs.size(); ++i) {
    const ObservationEntry& e = obs.layout[static_cast<std::size_t>(i)];
    const std::string& name = model.wells.at(e.well).name;
    check_name(name);
    out << format_number(e.time) << ',' << name << ',' << to_string(e.kind) << ','
        << format_number(to_report_units(e.kind, obs.values[i])) << ',' << unit_of(e.kind);
    if (sigma) out << ',' << format_number(to_report_units(e.kind, (*sigma)[i]));
    out << '\n';
  }
}

ObservationTable read_observations_csv(const std::filesystem::path& path, const ReservoirModel& model) {
  auto in = open_in(path);
  std::vector<std::string> row;
  if (!next_row(in, row) || row.size() < 5 || row[0] != "time" || row[3] != "value")
    throw ConfigError(path.string() + ": missing time,well,kind,value,unit header");
  const bool has_sigma = row.size() == 6 && row[5] == "sigma";
  const auto layout = observation_layout(model);
  ObservationTable t;
  t.observations.layout = layout;
  t.observations.values.resize(static_cast<Index>(layout.size()));
  if (has_sigma) t.sigma.resize(static_cast<Index>(layout.size()));
  std::size_t n = 0;
  while (next_row(in, row)) {
    if (row.size() != (has_sigma ? 6u : 5u)) throw ConfigError(path.string() + ": malformed row");
    if (n >= layout.size()) throw ConfigError(path.string() + ": more rows than the model observes");
    const ObservationEntry& e = layout[n];
    if (row[1] != model.wells[e.well].name || row[2] != to_string(e.kind) ||
        std::abs(parse_number(row[0], path) - e.time) > 1e-9 * std::max(1.0, e.time))
      throw ConfigError(path.string() + ": row " + std::to_string(n + 1) + " does not match the model layout (" +
                        model.wells[e.well].name + ", " + to_string(e.kind) + ")");
    if (row[4] != unit_of(e.kind)) throw ConfigError(path.string() + ": unexpected unit '" + row[4] + "'");
    const auto i = static_cast<Index>(n);
    t.observations.values[i] = from_report_units(e.kind, parse_number(row[3], path));
    if (has_sigma) t.sigma[i] = from_report_units(e.kind, parse_number(row[5], path));
    ++n;
  }
  if (n != layout.size()) throw ConfigError(path.string() + ": fewer rows than the model observes");
  return t;
}

void write_wells_csv(const std::filesystem::path& path, const ReservoirModel& model) {
  auto out = open_out(path);
  out << "name,kind,x,y,cell,rate\n";
  for (const WellSpec& w : model.wells) {
    check_name(w.name);
    out << w.name << ',' << to_string(w.kind) << ',' << format_number(w.location.x) << ','
        << format_number(w.location.y) << ',' << cell_of(model.grid, w.location) << ','
        << format_number(w.rate(0)) << '\n';
  }
}

void write_reg_iterations_csv(const std::filesystem::path& path, const RegLMResult& result) {
  auto out = open_out(path);
  out << "iteration,misfit,alpha,trials,kappa,kappa_target,rel_error,iterate_change\n";
  for (const IterationRecord& r : result.records)
    out << r.iteration << ',' << format_number(r.misfit) << ',' << format_number(r.alpha) << ','
        << r.alpha_trials << ',' << format_number(r.kappa) << ',' << format_number(r.kappa_target) << ','
        << format_number(r.rel_error) << ',' << format_number(r.iterate_change) << '\n';
}

void write_std_iterations_csv(const std::filesystem::path& path, const StdLMResult& result) {
  auto out = open_out(path);
  out << "iteration,J,misfit,lambda,stop_metric_J,stop_metric_u,accepted,rel_error\n";
  for (const StdLMRecord& r : result.records)
    out << r.iteration << ',' << format_number(r.objective) << ',' << format_number(r.misfit) << ','
        << format_number(r.lambda) << ',' << format_number(r.stop_metric_j) << ','
        << format_number(r.stop_metric_u) << ',' << (r.accepted ? 1 : 0) << ',' << format_number(r.rel_error)
        << '\n';
}

void write_timing_csv(const std::filesystem::path& path, const std::vector<double>& seconds) {
  auto out = open_out(path);
  out << "iteration,seconds\n";
  for (std::size_t i = 0; i < seconds.size(); ++i) out << i << ',' << format_number(seconds[i]) << '\n';
}

void write_study_summary_csv(const std::filesystem::path& path, const StudyReport& report) {
  auto out = open_out(path);
  out << "value,fraction,kappa,rho,tau,eta,iterations,converged,final_misfit,final_rel_error,prior_rel_error\n";
  for (const StudyPoint& p : report.points)
    out << format_number(p.value) << ',' << format_number(p.fraction) << ',' << format_number(p.kappa) << ','
        << format_number(p.rho) << ',' << format_number(p.tau) << ',' << format_number(p.eta) << ','
        << p.iterations << ',' << (p.converged ? 1 : 0) << ',' << format_number(p.final_misfit) << ','
        << format_number(p.final_rel_error) << ',' << format_number(p.prior_rel_error) << '\n';
}

}  // namespace resinv
