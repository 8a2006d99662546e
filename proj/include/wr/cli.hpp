#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wr/error.hpp"

namespace wr::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kInputData = 3, kInternal = 4 };

ExitCode exit_code_for(Errc code) noexcept;

/// Entry point of the `wr` tool. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wr::cli
