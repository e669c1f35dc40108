#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace prml::cli {

enum ExitCode : int {
    ok = 0,
    input_error = 1,    ///< bad arguments, config or data
    numerical_warning = 2,  ///< results written, but the fit hit the box or did not converge
    internal_error = 3,
};

/// Runs the command line `args` (program name first). Human-readable
/// summaries go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prml::cli
