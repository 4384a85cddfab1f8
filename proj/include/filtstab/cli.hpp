#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

namespace filtstab::cli {

enum ExitCode : int {
  kOk = 0,
  kInvalidInput = 1,
  kNumericalFailure = 2,
  kPropertyFailure = 3,
};

/// Environment variable naming the directory results go to when --output is
/// not given. Files are named <subcommand>.<csv|json>.
inline constexpr const char* kOutputDirEnv = "FILTSTAB_OUTPUT_DIR";

/// Runs one subcommand (validate, simulate, stability, ergodicity, backward,
/// kaijser, lln). argv[0] is the program name. Results go to the output
/// file, or to `out` when no destination is configured; diagnostics go to
/// `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// "0.5, 0.25,0.25" -> {0.5, 0.25, 0.25}. Throws InvalidInput on bad tokens.
std::vector<double> parse_list(std::string_view text);

}  // namespace filtstab::cli
