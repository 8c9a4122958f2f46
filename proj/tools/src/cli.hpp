#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spinlab::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kGuardViolation = 3,
    kBudget = 4,
};

// Largest enumeration budget accepted on the command line.
inline constexpr int kBudgetBitsCap = 34;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spinlab::cli
