#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace grscde::cli {

/// Runs the `bench`, `fit` or `eval` subcommand. Returns the process exit
/// code; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads a flat key = value file into `--key=value` tokens. Underscores in
/// keys become dashes.
std::vector<std::string> config_tokens(const std::string& path);

std::vector<std::string> split_list(const std::string& s);

}  // namespace grscde::cli
