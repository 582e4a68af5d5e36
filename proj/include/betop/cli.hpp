#pragma once

#include <string>

namespace betop {

enum class LogLevel { error = 0, info = 1, debug = 2 };

/// Level taken from the BETOP_LOG environment variable ("error", "info" or
/// "debug"); unset or unrecognized values mean error.
LogLevel log_level();

/// Writes one line to stderr when the level permits.
void log_info(const std::string& line);
void log_debug(const std::string& line);

/// Command-line entry point; argv[0] is the program name. Returns the process
/// exit code: 0 on success, 1 on a usage or validation error, 2 when an
/// internal error escapes.
int cli_run(int argc, const char* const* argv);

}  // namespace betop
