#pragma once

namespace graphtext {

/// Entry point for the `graphtext` subcommand interface. Returns the process
/// exit code: 0 success, 2 usage, 3 data/format, 4 provider/transport,
/// 5 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace graphtext
