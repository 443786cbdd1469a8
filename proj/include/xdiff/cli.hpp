#pragma once

// `xdiff train|denoise|eval|check-stability`.

#include <ostream>

namespace xdiff::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitStability = 3;

// Feasibility tolerance on min c for a trained parameter set.
inline constexpr double kFeasibilityTolerance = 1e-8;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace xdiff::cli
