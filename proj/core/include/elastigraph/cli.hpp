#pragma once

#include <string>
#include <vector>

namespace elastigraph {

// Batch front door: parses arguments, dispatches subcommands, writes JSON
// results. Returns the process exit code: 0 success, 2 validation error,
// 3 non-convergence (bounds still emitted).
int run_cli(const std::vector<std::string>& args);

}  // namespace elastigraph
