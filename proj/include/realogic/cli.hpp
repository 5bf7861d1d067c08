#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace realogic {

// Entry point behind the realogic binary. args excludes the program name.
// Subcommands:
//   train     --config <json> [--out <dir>] [--seed <u64>]
//   eval      --config <json> [--params <bin>] [--seed <u64>]
//   gradcheck --config <json> [--seed <u64>] [--step <h>]
// Every failure prints a machine-parsable E_* code line to err, then the
// human-readable detail, and returns nonzero.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args);  // stdout/stderr

}  // namespace realogic
