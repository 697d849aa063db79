#pragma once

#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "vsbbm/config.hpp"

namespace vsbbm {

// Writes to a temporary sibling and renames over `path`, so readers never
// observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

struct Artifact {
  std::string name;  // relative to the output directory
  std::size_t bytes = 0;
  std::string fnv1a;
};

struct RunResult {
  std::string config_hash;
  std::vector<Artifact> artifacts;  // manifest.json last
};

// Version tag per module, recorded in the manifest.
const std::vector<std::pair<std::string, std::string>>& module_versions();

// Validates the config, runs the experiment and writes every artifact plus
// manifest.json into config.out. Output depends only on the config (not on
// the worker count).
RunResult run_experiment(const ExperimentConfig& config);

// {"error": kind, "message": ..., ...} for the exception in flight.
std::string error_json(const std::exception& e);

}  // namespace vsbbm
