#pragma once

#include <string>

#include "json.hpp"
#include "run_config.hpp"

namespace conespec::cli {

struct CommandResult {
  std::string csv;            // body without the version line
  nlohmann::json headline;    // headline_numbers of summary.json
  /// False when the command ran but its own checks failed (selftest).
  bool checks_passed = true;
};

/// Executes cfg.command. Config problems found while building the manifold
/// throw ConfigError with a line anchor; numerical problems propagate as
/// the library's Error types.
CommandResult run_command(const RunConfig& cfg);

/// Fast closed-form checks behind `selftest`.
CommandResult run_selftest();

}  // namespace conespec::cli
