#pragma once

#include <filesystem>
#include <string>

#include "byzlab/simulator/atc.hpp"

namespace byzlab {

struct OutputOptions {
  std::string dir = "out";
  bool per_agent = false;
  bool clip_2d = false;
};

struct RunConfig {
  ExperimentConfig experiment;
  OutputOptions output;
};

/// Parses a JSON run configuration. Every section is optional; unknown keys
/// are rejected with their dotted path. A "run" section (as written into
/// metadata) is accepted and ignored.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully resolved configuration, defaults included.
std::string config_json(const RunConfig& cfg);

/// Resolved configuration plus a "run" section describing the outcome.
std::string metadata_json(const RunConfig& cfg, const RunTrace& trace);

std::string weight_rule_name(WeightRule rule);

}  // namespace byzlab
