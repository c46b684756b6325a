#pragma once

namespace dpound {

// Entry point for the dpoundsim command line tool.
// Exit codes: 0 success, 1 a simulation or validation check failed,
// 2 bad usage or unreadable input.
int run_cli(int argc, const char* const* argv);

} // namespace dpound
