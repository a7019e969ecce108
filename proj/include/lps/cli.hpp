#pragma once

namespace lps {

/// Entry point of the `lps` tool. Returns the process exit code: 0 on
/// success, 2 for configuration problems (bad flags, bad configs), 3 for data
/// problems (unreadable or inconsistent inputs, failed scans).
int run_cli(int argc, const char* const* argv);

}  // namespace lps
