#include "resinv/cli.hpp"

#include "resinv/checks.hpp"
#include "resinv/config.hpp"
#include "resinv/error.hpp"
#include "resinv/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace resinv {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* version = "1.0.0";

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool verbose = false;
};

class Run {
 public:
  Run(std::string verb, const Options& opt, std::ostream& out, std::ostream& err)
      : verb_(std::move(verb)), opt_(opt), out_(out), err_(err), dir_(opt.out) {
    manifest_["tool"] = "resinv";
    manifest_["version"] = version;
    manifest_["verb"] = verb_;
    manifest_["config"] = opt.config;
    manifest_["artifacts"] = ordered_json::array();
  }

  const CaseConfig& config() const { return cfg_; }
  const fs::path& dir() const { return dir_; }
  std::ostream& out() { return out_; }

  void load() {
    cfg_ = load_config(opt_.config);
    if (opt_.seed) override_seed(cfg_, *opt_.seed);
    if (opt_.threads) {
      cfg_.setup.threads = *opt_.threads;
    } else if (const char* env = std::getenv("RESINV_THREADS")) {
      try {
        cfg_.setup.threads = std::stoi(env);
      } catch (const std::exception&) {
        throw ConfigError("RESINV_THREADS must be an integer, got '" + std::string(env) + "'");
      }
    }
    if (cfg_.setup.threads < 1) throw ConfigError("thread count must be at least 1");
    manifest_["config_hash"] = "fnv1a64:" + fnv1a_hex(cfg_.source);
    manifest_["seeds"] = {{"truth", cfg_.setup.truth_seed}, {"noise", cfg_.setup.noise_seed}};
    manifest_["threads"] = cfg_.setup.threads;
  }

  /// Registers an output file relative to the output directory.
  fs::path artifact(const fs::path& rel, std::optional<std::uint64_t> seed = std::nullopt) {
    ordered_json a{{"path", rel.generic_string()}};
    if (seed) a["seed"] = *seed;
    manifest_["artifacts"].push_back(a);
    return dir_ / rel;
  }

  ordered_json& manifest() { return manifest_; }

  void progress(const std::string& msg) const {
    if (opt_.verbose) err_ << msg << '\n';
  }
  ProgressCallback callback() const {
    return [this](const std::string& m) { progress(m); };
  }

  void finish(int code, const std::string& error = {}) {
    manifest_["status"] = code == 0 ? "ok" : "failed";
    manifest_["exit_code"] = code;
    if (!error.empty()) manifest_["error"] = error;
    try {
      fs::create_directories(dir_);
      std::ofstream f(dir_ / "manifest.json", std::ios::binary);
      f << manifest_.dump(2) << '\n';
    } catch (const std::exception& e) {
      err_ << "resinv: could not write manifest: " << e.what() << '\n';
    }
  }

 private:
  std::string verb_;
  Options opt_;
  std::ostream& out_;
  std::ostream& err_;
  fs::path dir_;
  CaseConfig cfg_;
  ordered_json manifest_;
};

ordered_json diagnostics_json(const SimulationDiagnostics& d) {
  return {{"max_pressure_residual", d.max_pressure_residual},
          {"max_water_imbalance", d.max_water_imbalance},
          {"max_clamp_violation", d.max_clamp_violation},
          {"max_cfl_number", d.max_cfl_number},
          {"min_saturation", d.min_saturation},
          {"max_saturation", d.max_saturation}};
}

std::string two_digits(std::size_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%02zu", n);
  return buf;
}

void cmd_simulate(Run& run) {
  const CaseConfig& cfg = run.config();
  const ReservoirModel& model = cfg.setup.model;
  Field u(model.grid, cfg.setup.prior.mean);
  if (cfg.field) {
    u = read_field_csv(*cfg.field);
    if (!(u.grid() == model.grid)) {
      if (u.grid().nx() != model.grid.nx() || u.grid().ny() != model.grid.ny())
        throw ConfigError("simulate: field grid does not match the model grid");
      u = Field(model.grid, u.values());
    }
  }
  const SimulationResult result = simulate(u, model, {false, cfg.dump_fields});
  write_observations_csv(run.artifact("observations.csv"), result.observations, model);
  write_wells_csv(run.artifact("wells.csv"), model);
  if (cfg.dump_fields) {
    for (std::size_t n = 0; n < result.reports.size(); ++n) {
      Field p = result.reports[n].pressure;
      write_field_csv(run.artifact("fields/pressure_" + two_digits(n + 1) + ".csv"), p);
      write_field_csv(run.artifact("fields/saturation_" + two_digits(n + 1) + ".csv"),
                      result.reports[n].saturation);
    }
  }
  run.manifest()["diagnostics"] = diagnostics_json(result.diagnostics);
  run.out() << "simulated " << model.schedule.report_times.size() << " reports, " << result.observations.size()
            << " observations\n";
}

TruthCase sampled_truth(Run& run) {
  const ExperimentSetup& s = run.config().setup;
  TruthCase t = make_truth(s);
  write_field_csv(run.artifact("truth.csv", s.truth_seed), Field(s.model.grid, t.truth));
  return t;
}

void cmd_sample_truth(Run& run) {
  const ExperimentSetup& s = run.config().setup;
  const Vector mean = Vector::Constant(s.model.grid.cell_count(), s.prior.mean);
  const CovarianceOperator c0 = build_prior(s.model.grid, s.prior, 1.0);
  const Field truth = sample_field(c0, Field(s.model.grid, mean), s.truth_seed);
  write_field_csv(run.artifact("truth.csv", s.truth_seed), truth);
  run.out() << "sampled truth with seed " << s.truth_seed << '\n';
}

struct InversionInputs {
  Vector y;
  Vector sigma;
  double eta = 0.0;
  std::optional<Vector> truth;
  Vector prior_mean;
};

/// External data from the config, or synthetic data from a sampled truth.
InversionInputs inversion_inputs(Run& run) {
  const CaseConfig& cfg = run.config();
  const ExperimentSetup& s = cfg.setup;
  InversionInputs in;
  in.prior_mean = Vector::Constant(s.model.grid.cell_count(), s.prior.mean);
  if (cfg.data) {
    const ObservationTable table = read_observations_csv(*cfg.data, s.model);
    if (table.sigma.size() == 0) throw ConfigError("inputs.data needs a sigma column");
    if (!cfg.eta) throw ConfigError("inputs.data needs noise.eta");
    in.y = table.observations.values;
    in.sigma = table.sigma;
    in.eta = *cfg.eta;
    return in;
  }
  const TruthCase t = sampled_truth(run);
  const NoiseModel noise = build_gamma(t.clean, s.model, s.noise_fraction, s.noise_seed);
  const SyntheticData data = synthesize_data(t.clean.values, noise);
  ObservationVector noisy{data.y, t.clean.layout};
  write_observations_csv(run.artifact("data.csv", s.noise_seed), noisy, s.model, &noise.sigma);
  in.y = data.y;
  in.sigma = noise.sigma;
  in.eta = cfg.eta.value_or(data.eta);
  in.truth = t.truth;
  in.prior_mean = t.prior_mean;
  run.manifest()["eta"] = in.eta;
  return in;
}

void cmd_synth_data(Run& run) {
  const ExperimentSetup& s = run.config().setup;
  const TruthCase t = sampled_truth(run);
  const NoiseModel noise = build_gamma(t.clean, s.model, s.noise_fraction, s.noise_seed);
  const SyntheticData data = synthesize_data(t.clean.values, noise);
  write_observations_csv(run.artifact("clean.csv", s.truth_seed), t.clean, s.model);
  write_observations_csv(run.artifact("data.csv", s.noise_seed), {data.y, t.clean.layout}, s.model,
                         &noise.sigma);
  write_wells_csv(run.artifact("wells.csv"), s.model);
  run.manifest()["eta"] = data.eta;
  run.manifest()["noise_fraction"] = s.noise_fraction;
  run.out() << "eta " << format_number(data.eta) << " over " << data.y.size() << " observations\n";
}

void write_estimate(Run& run, const ReservoirForwardModel& forward, const Vector& u, const fs::path& prefix) {
  const ReservoirModel& model = forward.model();
  write_field_csv(run.artifact(prefix / "estimate.csv"), Field(model.grid, u));
  const SimulationResult r = simulate(Field(model.grid, u), model, {false, false});
  write_observations_csv(run.artifact(prefix / "forecast.csv"), r.observations, model);
}

void cmd_invert(Run& run, bool regularizing) {
  const ExperimentSetup& s = run.config().setup;
  const InversionInputs in = inversion_inputs(run);
  const ReservoirForwardModel forward(s.model, s.method, s.fd_step, s.threads);
  const CovarianceOperator prior = build_prior(s.model.grid, s.prior, s.kappa);
  const DataCovariance gamma = DataCovariance::diagonal(in.sigma.array().square().matrix());
  const InversionProblem problem{forward, prior, gamma, in.y, in.prior_mean, in.truth};
  std::vector<double> seconds;
  Vector u;
  if (regularizing) {
    const RegLMResult r = run_reg_lm(problem, in.eta, s.reg, run.callback());
    write_reg_iterations_csv(run.artifact("iterations.csv"), r);
    for (const auto& rec : r.records) seconds.push_back(rec.seconds);
    run.manifest()["stop_reason"] = to_string(r.reason);
    run.out() << "regularizing LM: " << r.records.size() - 1 << " iterations, misfit "
              << format_number(r.records.back().misfit) << ", stop " << to_string(r.reason) << '\n';
    u = r.u;
  } else {
    const StdLMResult r = run_std_lm(problem, s.std_lm, run.callback());
    write_std_iterations_csv(run.artifact("iterations.csv"), r);
    for (const auto& rec : r.records) seconds.push_back(rec.seconds);
    run.manifest()["converged"] = r.converged;
    run.out() << "standard LM: " << r.records.size() - 1 << " iterations, J "
              << format_number(r.records.back().objective) << (r.converged ? ", converged" : ", not converged")
              << '\n';
    u = r.u;
  }
  write_timing_csv(run.artifact("timing.csv"), seconds);
  write_estimate(run, forward, u, {});
}

void cmd_study(Run& run) {
  const CaseConfig& cfg = run.config();
  const StudySpec spec = cfg.study();
  const StudyContext ctx = reservoir_context(spec.base);
  const StudyReport report = run_study(spec, ctx, run.callback());
  const ReservoirModel& model = spec.base.model;
  write_field_csv(run.artifact("truth.csv", spec.base.truth_seed), Field(model.grid, report.truth.truth));
  write_observations_csv(run.artifact("clean.csv", spec.base.truth_seed), report.truth.clean, model);
  write_wells_csv(run.artifact("wells.csv"), model);
  write_study_summary_csv(run.artifact("summary.csv"), report);
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    const StudyPoint& p = report.points[i];
    const fs::path dir = "point_" + two_digits(i);
    std::vector<double> seconds;
    if (p.reg) {
      write_reg_iterations_csv(run.artifact(dir / "iterations.csv"), *p.reg);
      for (const auto& r : p.reg->records) seconds.push_back(r.seconds);
    } else {
      write_std_iterations_csv(run.artifact(dir / "iterations.csv"), *p.std_lm);
      for (const auto& r : p.std_lm->records) seconds.push_back(r.seconds);
    }
    write_timing_csv(run.artifact(dir / "timing.csv"), seconds);
    write_field_csv(run.artifact(dir / "estimate.csv"), Field(model.grid, p.final_u));
    write_observations_csv(run.artifact(dir / "forecast.csv"), {p.forecast, report.truth.clean.layout}, model);
  }
  run.manifest()["study"] = to_string(spec.kind);
  run.out() << to_string(spec.kind) << " study: " << report.points.size() << " runs\n";
}

int cmd_check(Run& run) {
  const auto results = run_invariant_checks(run.config().setup);
  bool ok = true;
  ordered_json list = ordered_json::array();
  for (const CheckResult& r : results) {
    run.out() << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << format_number(r.value)
              << " (tolerance " << format_number(r.tolerance) << ")\n";
    list.push_back({{"name", r.name}, {"passed", r.passed}, {"value", r.value}, {"tolerance", r.tolerance}});
    ok = ok && r.passed;
  }
  run.manifest()["checks"] = list;
  return ok ? 0 : 2;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"History matching with regularizing and standard Levenberg-Marquardt schemes", "resinv"};
  app.require_subcommand(1);
  Options opt;
  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"simulate", "run the forward simulator and write observations"},
      {"sample-truth", "draw a log-permeability field from the prior"},
      {"synth-data", "simulate a sampled truth and add measurement noise"},
      {"invert-reglm", "invert with the regularizing Levenberg-Marquardt scheme"},
      {"invert-stdlm", "invert with the standard penalized Levenberg-Marquardt scheme"},
      {"study", "run the parameter sweep described in the config"},
      {"check", "run the invariant battery and print pass/fail per check"}};
  for (const auto& [name, help] : verbs) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", opt.config, "case file (YAML)")->required();
    sub->add_option("-o,--out", opt.out, "output directory");
    sub->add_option("--seed", opt.seed, "truth seed; the noise seed becomes seed + 1");
    sub->add_option("--threads", opt.threads, "worker threads (default: RESINV_THREADS or config)");
    sub->add_flag("-v", opt.verbose, "progress messages on stderr");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "resinv: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  const std::string verb = app.get_subcommands().front()->get_name();
  Run run(verb, opt, out, err);
  try {
    run.load();
    int code = 0;
    if (verb == "simulate") cmd_simulate(run);
    else if (verb == "sample-truth") cmd_sample_truth(run);
    else if (verb == "synth-data") cmd_synth_data(run);
    else if (verb == "invert-reglm") cmd_invert(run, true);
    else if (verb == "invert-stdlm") cmd_invert(run, false);
    else if (verb == "study") cmd_study(run);
    else if (verb == "check") code = cmd_check(run);
    run.finish(code, code ? "invariant checks failed" : "");
    return code;
  } catch (const ConfigError& e) {
    err << "resinv: " << e.what() << '\n';
    run.finish(1, e.what());
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "resinv: " << e.what() << '\n';
    run.finish(1, e.what());
    return 1;
  } catch (const NumericalError& e) {
    err << "resinv: numerical failure in " << e.module() << "::" << e.operation() << ": " << e.message() << '\n';
    run.finish(2, e.what());
    return 2;
  } catch (const std::exception& e) {
    err << "resinv: " << e.what() << '\n';
    run.finish(2, e.what());
    return 2;
  }
}

}  // namespace resinv
