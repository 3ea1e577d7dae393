#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gustrl::cli {

enum ExitCode : int {
  kSuccess = 0,
  kValidation = 2,
  kRuntime = 3,
  kPartial = 4,
};

/// Environment variable naming the default output root.
inline constexpr const char* kOutputEnv = "GUSTRL_OUT";

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version();

}  // namespace gustrl::cli
