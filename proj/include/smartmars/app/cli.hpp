#pragma once

#include <atomic>
#include <ostream>
#include <string>
#include <vector>

namespace smartmars::app {

/// Process exit codes of the command line tool.
enum ExitCode : int { kOk = 0, kSemanticFailure = 1, kInputError = 2 };

/// Runs one `smartmars` invocation. `args` excludes the program name.
/// `interrupt` ends a `run --real` without a time limit.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::atomic<bool>* interrupt = nullptr);

}  // namespace smartmars::app
