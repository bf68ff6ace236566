#pragma once

// Subcommands of the command-line tool. Each writes its files and a JSON
// report into the output directory and maps the outcome onto an exit code.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbjet/config.hpp"

namespace fbjet {

enum ExitCode : int {
  kExitPass = 0,
  kExitCheckFailure = 1,
  kExitConfigError = 2,
  kExitNonConvergence = 3,
};

struct RunOutcome {
  int exit_code = kExitPass;
  nlohmann::json report;
  std::filesystem::path directory;
  std::vector<std::filesystem::path> files;  // report last
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"profiles", "solve", "fit", "continue", "verify"};
  return names;
}

/// Runs one subcommand. Errors are caught, recorded in the report and turned
/// into the exit code; the report is written in every case.
RunOutcome run(const std::string& subcommand, const RunConfig& config);

nlohmann::json to_json(const RunConfig& config);

}  // namespace fbjet
