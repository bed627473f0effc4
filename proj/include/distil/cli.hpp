#pragma once

namespace distil::cli {

// Entry point for the command-line tool. Returns the process exit code:
// 0 success, 1 runtime/data failure, 2 usage error.
int run(int argc, const char* const* argv);

}  // namespace distil::cli
