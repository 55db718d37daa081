#pragma once

#include <iosfwd>

namespace plcg::cli {

/// Exit codes of the command-line tool.
enum Exit : int { ok = 0, usage_error = 1, budget_exhausted = 2, breakdown = 3 };

/// Runs the tool with the given arguments; CSV goes to `out`, messages to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace plcg::cli
