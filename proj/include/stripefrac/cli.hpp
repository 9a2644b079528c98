#pragma once

#include <string>
#include <vector>

namespace stripefrac {

// Full command-line front end. Returns the process exit code: 0 on success,
// 1 on runtime failure (unreadable inputs, corrupt files, mismatched
// merges), 2 on usage errors. Tests drive this directly, in-process.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // args without argv[0]

}  // namespace stripefrac
