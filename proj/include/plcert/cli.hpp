#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace plcert::cli {

// Exit codes. Stable across versions.
inline constexpr int kOk = 0;
inline constexpr int kCampaignFailed = 1;
inline constexpr int kUsageError = 2;
inline constexpr int kHalted = 3;
inline constexpr int kRuntimeError = 4;

// Entry point behind the `plcert` binary. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace plcert::cli
