#pragma once

#include <ostream>
#include <string>

#include "config.hpp"

namespace lsabr::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalFailure = 3 };

struct CommandOptions {
    std::string config_path;
    std::string out;  ///< overrides output.path; for converge, a directory
    int jobs = 1;
};

int cmd_price(const RunConfig& cfg, const CommandOptions& opt, bool fd_only);
int cmd_compare(const RunConfig& cfg, const CommandOptions& opt);
int cmd_converge(const RunConfig& cfg, const CommandOptions& opt);
int cmd_bench(const RunConfig& cfg, const CommandOptions& opt);
int cmd_zeros(const RunConfig& cfg, const CommandOptions& opt);

/// Parses argv, dispatches, and maps exceptions to exit codes.
int run(int argc, char** argv);

}  // namespace lsabr::cli
