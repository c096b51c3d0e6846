#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace lyapstream {

/// Exit codes of the command-line front end.
enum ExitCode : int {
    kExitOk = 0,
    kExitOracleGap = 1,
    kExitBadConfig = 2,
    kExitIo = 3,
};

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
std::vector<double> parse_values(std::string_view spec);
std::vector<std::uint64_t> parse_seeds(std::string_view spec);

/// Entry point behind the `lyapstream` executable. `args` excludes the
/// program name. Diagnostics go to `err`, reports to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lyapstream
