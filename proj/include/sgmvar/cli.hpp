#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sgmvar::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

/// Runs one verb (estimate, simulate, girf, diagnose, decompose, transform,
/// check-id). `args` excludes the program name. Messages go to `out`/`err`;
/// results are written to files in the output directory.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace sgmvar::cli
