#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pcl {

// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInput = 2,          // missing/invalid input files or configuration
  kExitFormat = 3,         // gold/prediction arity or row-count mismatch
  kExitCompatibility = 4,  // checkpoint does not match the request
};

// Environment variable that overrides the configured translator endpoint.
inline constexpr const char* kTranslatorEndpointEnv = "PCL_TRANSLATOR_ENDPOINT";

// Entry point of the `pcl` tool: prepare, augment, train, evaluate, predict.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pcl
