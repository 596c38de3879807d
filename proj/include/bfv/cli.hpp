#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bfv/engine.hpp"

namespace bfv::cli {

enum ExitCode : int {
    kExitSolution = 0,
    kExitCheckFailed = 1,
    kExitUsage = 2,
};

/// 0 for BF_SOLUTION, 1 for every failed outcome.
[[nodiscard]] int exit_code(Outcome o);

/// Fixed-column summary printed by `check`: the outcome on the first line,
/// then one row per check.
void print_summary(const Verdict& v, std::ostream& out, bool verbose = false);

/// Parses BF_VERIFY_THREADS; nullopt when unset, throws on a malformed value.
[[nodiscard]] std::optional<unsigned> threads_from_env();

/// Entry point. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace bfv::cli
