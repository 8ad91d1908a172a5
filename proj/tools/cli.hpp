#pragma once

#include <ostream>

namespace iolws::cli {

// Exit codes of the iolws-sim command.
enum ExitCode : int {
    kOk = 0,
    kCheckFailed = 1, ///< report: a comparison did not pass
    kUsage = 2,       ///< bad flags, config or missing inputs
    kInfeasible = 3,  ///< TOO_MANY_DISCARDS
    kCalibration = 4, ///< CALIBRATION_DIVERGED
};

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace iolws::cli
