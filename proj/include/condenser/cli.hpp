#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "condenser/config.hpp"
#include "condenser/error.hpp"
#include "condenser/solver.hpp"

namespace condenser::cli {

enum ExitCode : int {
  kPass = 0,
  kUsage = 1,        // unknown subcommand or flag
  kConfig = 2,       // config, input file or infeasible problem data
  kSolver = 3,       // solver breakdown
  kDiagnostics = 4,  // a diagnostic threshold failed
};

/// Maps a library error to the documented exit code.
int exit_code_for(ErrorCode code);

/// Columns: index, x1..xn, weight_plus, weight_minus, potential, weighted_potential, constraint_slack.
/// constraint_slack is xi - lambda+ on A1 nodes and empty on A2 nodes. Values use 17 significant digits.
void write_solution_csv(const std::filesystem::path& path, const Problem& p, const SignedDiscreteMeasure& lambda);

/// Reads weight_plus and weight_minus back onto the problem cloud; throws ConfigError on a
/// row count or coordinate mismatch.
SignedDiscreteMeasure read_solution_csv(const std::filesystem::path& path, const Problem& p);

/// Library and compiler versions recorded in manifests.
nlohmann::json versions();

/// Entry point of the `condenser` executable.
int run(int argc, char** argv);

}  // namespace condenser::cli
