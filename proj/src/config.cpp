#include "resinv/config.hpp"

#include "resinv/error.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace resinv {

namespace {

/// Map node whose keys are checked against an allow-list on construction.
class Section {
 public:
  Section(const YAML::Node& node, std::string name, std::set<std::string> allowed)
      : node_(node), name_(std::move(name)) {
    if (!node_) return;
    if (!node_.IsMap()) throw ConfigError("config: '" + name_ + "' must be a mapping");
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) throw ConfigError("config: unknown key '" + key + "' in '" + name_ + "'");
    }
  }

  bool has(const char* key) const { return node_ && node_[key]; }
  YAML::Node operator[](const char* key) const { return node_ ? node_[key] : YAML::Node(); }
  const std::string& name() const noexcept { return name_; }

  template <typename T>
  void read(const char* key, T& out) const {
    if (!has(key)) return;
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("config: '" + name_ + "." + key + "' has the wrong type");
    }
  }

  template <typename T>
  void read(const char* key, std::optional<T>& out) const {
    if (!has(key)) return;
    T value{};
    read(key, value);
    out = value;
  }

 private:
  YAML::Node node_;
  std::string name_;
};

std::vector<double> read_list(const YAML::Node& node, const std::string& where) {
  if (node.IsScalar()) return {node.as<double>()};
  if (!node.IsSequence()) throw ConfigError("config: '" + where + "' must be a number or a list");
  std::vector<double> out;
  for (const auto& v : node) out.push_back(v.as<double>());
  return out;
}

SensitivityMethod method_from_string(const std::string& s) {
  if (s == "adjoint") return SensitivityMethod::adjoint;
  if (s == "finite_difference") return SensitivityMethod::finite_difference;
  throw ConfigError("config: sensitivity.method must be adjoint or finite_difference, got '" + s + "'");
}

WellKind kind_from_string(const std::string& s) {
  if (s == "injector") return WellKind::injector;
  if (s == "producer") return WellKind::producer;
  throw ConfigError("config: well kind must be injector or producer, got '" + s + "'");
}

ReservoirModel read_model(const YAML::Node& root) {
  DeskCaseOptions desk;
  int nx = desk.n;
  int ny = desk.n;
  double lx = desk.length;
  double ly = desk.length;
  double thickness = desk.thickness;
  const Section grid(root["grid"], "grid", {"nx", "ny", "lx", "ly", "thickness"});
  grid.read("nx", nx);
  grid.read("ny", ny);
  grid.read("lx", lx);
  grid.read("ly", ly);
  grid.read("thickness", thickness);
  const Grid g(nx, ny, lx, ly, thickness);

  PhysicalParams ph;
  const Section physics(root["physics"], "physics",
                        {"mu_w", "mu_o", "a_w", "a_o", "s_iw", "s_or", "porosity", "p0", "s0", "p_bh"});
  physics.read("mu_w", ph.mu_w);
  physics.read("mu_o", ph.mu_o);
  physics.read("a_w", ph.a_w);
  physics.read("a_o", ph.a_o);
  physics.read("s_iw", ph.s_iw);
  physics.read("s_or", ph.s_or);
  physics.read("p0", ph.p0);
  physics.read("s0", ph.s0);
  physics.read("p_bh", ph.p_bh);
  ph.porosity = Vector::Constant(g.cell_count(), desk.porosity);
  if (physics.has("porosity")) {
    const auto values = read_list(physics["porosity"], "physics.porosity");
    if (values.size() == 1) {
      ph.porosity.setConstant(values[0]);
    } else if (static_cast<Index>(values.size()) == g.cell_count()) {
      ph.porosity = Eigen::Map<const Vector>(values.data(), g.cell_count());
    } else {
      throw ConfigError("config: physics.porosity needs one value or one per cell");
    }
  }

  Schedule sched;
  const Section schedule(root["schedule"], "schedule",
                         {"total_time", "report_count", "report_times", "max_dt", "cfl"});
  double total = desk.total_time;
  int reports = desk.report_count;
  double max_dt = desk.max_dt;
  double cfl = desk.cfl;
  schedule.read("total_time", total);
  schedule.read("report_count", reports);
  schedule.read("max_dt", max_dt);
  schedule.read("cfl", cfl);
  if (schedule.has("report_times")) {
    if (schedule.has("report_count"))
      throw ConfigError("config: give either schedule.report_count or schedule.report_times");
    sched.total_time = total;
    sched.max_dt = max_dt;
    sched.cfl = cfl;
    sched.report_times = read_list(schedule["report_times"], "schedule.report_times");
  } else {
    sched = uniform_schedule(total, reports, max_dt, cfl);
  }

  const Section wells(root["wells"], "wells",
                      {"layout", "injector_rate", "well_radius", "equivalent_radius_factor", "list"});
  std::string layout = "standard";
  double injector_rate = desk.injector_rate;
  double radius = 0.1;
  double re_factor = 0.2;
  wells.read("layout", layout);
  wells.read("injector_rate", injector_rate);
  wells.read("well_radius", radius);
  wells.read("equivalent_radius_factor", re_factor);
  std::vector<WellSpec> list;
  if (layout == "standard") {
    if (wells.has("list")) throw ConfigError("config: wells.list requires wells.layout: list");
    list = standard_well_layout(g, injector_rate, radius, re_factor);
  } else if (layout == "list") {
    if (!wells.has("list") || !wells["list"].IsSequence())
      throw ConfigError("config: wells.layout: list needs a wells.list sequence");
    const double wi = peaceman_geometric_index(g, radius, re_factor);
    for (const auto& node : wells["list"]) {
      const Section w(node, "wells.list[]", {"name", "kind", "x", "y", "rate", "rates", "well_index"});
      WellSpec spec;
      std::string kind = "injector";
      w.read("name", spec.name);
      w.read("kind", kind);
      spec.kind = kind_from_string(kind);
      w.read("x", spec.location.x);
      w.read("y", spec.location.y);
      if (w.has("rate") == w.has("rates")) throw ConfigError("config: well '" + spec.name + "' needs rate or rates");
      spec.rates = read_list(w.has("rate") ? w["rate"] : w["rates"], "wells.list[].rates");
      spec.well_index = wi;
      w.read("well_index", spec.well_index);
      list.push_back(std::move(spec));
    }
  } else {
    throw ConfigError("config: wells.layout must be standard or list, got '" + layout + "'");
  }

  ReservoirModel model{g, std::move(ph), std::move(list), std::move(sched)};
  model.validate();
  return model;
}

}  // namespace

StudySpec CaseConfig::study() const {
  if (!study_kind) throw ConfigError("config: no study section");
  StudySpec spec;
  spec.kind = *study_kind;
  spec.sweep = sweep;
  spec.base = setup;
  spec.validate();
  return spec;
}

CaseConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: YAML parse error: ") + e.what());
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  const Section top(root, "top level",
                    {"grid", "physics", "schedule", "wells", "prior", "noise", "seeds", "reg_lm", "std_lm",
                     "sensitivity", "study", "inputs", "output"});

  CaseConfig cfg;
  cfg.source = text;
  ExperimentSetup& s = cfg.setup;
  s.model = read_model(root);

  const Section prior(root["prior"], "prior", {"mean", "range", "angle", "axis_ratio", "kappa"});
  prior.read("mean", s.prior.mean);
  prior.read("range", s.prior.range);
  prior.read("angle", s.prior.angle);
  prior.read("axis_ratio", s.prior.axis_ratio);
  prior.read("kappa", s.kappa);

  const Section noise(root["noise"], "noise", {"fraction", "eta"});
  noise.read("fraction", s.noise_fraction);
  noise.read("eta", cfg.eta);

  const Section seeds(root["seeds"], "seeds", {"truth", "noise"});
  seeds.read("truth", s.truth_seed);
  seeds.read("noise", s.noise_seed);

  const Section reg(root["reg_lm"], "reg_lm",
                    {"rho", "tau", "allow_small_tau", "alpha0", "alpha_growth", "max_iterations",
                     "max_alpha_trials"});
  if (reg.has("rho") || reg.has("tau")) s.reg.allow_small_tau = false;
  reg.read("rho", s.reg.rho);
  reg.read("tau", s.reg.tau);
  reg.read("allow_small_tau", s.reg.allow_small_tau);
  reg.read("alpha0", s.reg.alpha0);
  reg.read("alpha_growth", s.reg.alpha_growth);
  reg.read("max_iterations", s.reg.max_iterations);
  reg.read("max_alpha_trials", s.reg.max_alpha_trials);
  s.reg.validate();

  const Section std_lm(root["std_lm"], "std_lm",
                       {"lambda0", "eps0", "eps1", "max_iterations", "lambda_floor", "lambda_cap",
                        "accept_uphill"});
  std_lm.read("lambda0", s.std_lm.lambda0);
  std_lm.read("eps0", s.std_lm.eps0);
  std_lm.read("eps1", s.std_lm.eps1);
  std_lm.read("max_iterations", s.std_lm.max_iterations);
  std_lm.read("lambda_floor", s.std_lm.lambda_floor);
  std_lm.read("lambda_cap", s.std_lm.lambda_cap);
  std_lm.read("accept_uphill", s.std_lm.accept_uphill);
  s.std_lm.validate();

  const Section sens(root["sensitivity"], "sensitivity", {"method", "fd_step", "threads"});
  std::string method = "adjoint";
  sens.read("method", method);
  s.method = method_from_string(method);
  sens.read("fd_step", s.fd_step);
  sens.read("threads", s.threads);
  if (!(s.fd_step > 0.0)) throw ConfigError("config: sensitivity.fd_step must be positive");
  if (s.threads < 1) throw ConfigError("config: sensitivity.threads must be at least 1");

  const Section study(root["study"], "study", {"kind", "sweep"});
  if (study.has("kind")) {
    std::string kind;
    study.read("kind", kind);
    cfg.study_kind = study_kind_from_string(kind);
    if (!study.has("sweep")) throw ConfigError("config: study.sweep is required");
    cfg.sweep = read_list(study["sweep"], "study.sweep");
  } else if (study.has("sweep")) {
    throw ConfigError("config: study.sweep given without study.kind");
  }

  const Section inputs(root["inputs"], "inputs", {"field", "data"});
  std::string path;
  if (inputs.has("field")) {
    inputs.read("field", path);
    cfg.field = base_dir / path;
  }
  if (inputs.has("data")) {
    inputs.read("data", path);
    cfg.data = base_dir / path;
  }

  const Section output(root["output"], "output", {"dump_fields"});
  output.read("dump_fields", cfg.dump_fields);

  if (!(s.noise_fraction > 0.0)) throw ConfigError("config: noise.fraction must be positive");
  if (!(s.kappa > 0.0)) throw ConfigError("config: prior.kappa must be positive");
  if (cfg.eta && !(*cfg.eta > 0.0)) throw ConfigError("config: noise.eta must be positive");
  return cfg;
}

CaseConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

void override_seed(CaseConfig& config, std::uint64_t seed) {
  config.setup.truth_seed = seed;
  config.setup.noise_seed = seed + 1;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace resinv
