#pragma once

#include "resinv/experiments.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace resinv {

/// A case file: reservoir model, prior, noise, solver settings and an
/// optional study sweep. Every quantity is in SI units.
struct CaseConfig {
  ExperimentSetup setup;
  /// Data noise level; the realized |Gamma^{-1/2} xi| of synthetic data when unset.
  std::optional<double> eta;
  std::optional<StudyKind> study_kind;
  std::vector<double> sweep;
  /// Log-permeability field for `simulate`; the prior mean when unset.
  std::optional<std::filesystem::path> field;
  /// Observations to invert instead of synthetic data, with a per-row sigma column.
  std::optional<std::filesystem::path> data;
  bool dump_fields = false;  // write pressure/saturation per report from `simulate`
  std::string source;        // file text, hashed into the run manifest

  /// The study described by the config. Throws ConfigError without a study section.
  StudySpec study() const;
};

/// Parses YAML text. Unknown keys are rejected so typos do not silently
/// fall back to defaults. Relative paths resolve against `base_dir`.
CaseConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
CaseConfig load_config(const std::filesystem::path& path);

/// Sets the truth seed to `seed` and the noise seed to `seed + 1`.
void override_seed(CaseConfig& config, std::uint64_t seed);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace resinv
