#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace flashsim::cli {

inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;            // unexpected error
inline constexpr int kConfigError = 2;        // bad flags, config file, or inputs
inline constexpr int kOptimizerError = 3;     // a search could not produce a result
inline constexpr int kMissingDependency = 4;  // required artifact not supplied

// Run the toolkit CLI.  `args` excludes the program name.  All normal output
// goes to `out`, diagnostics to `err`; the return value is the exit code.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

// (subcommand, flag names) pairs for every registered subcommand; used to
// keep the --help texts honest.
std::vector<std::pair<std::string, std::vector<std::string>>> command_flags();

}  // namespace flashsim::cli
