#ifndef CONEWALK_LOG_HPP
#define CONEWALK_LOG_HPP

#include <string>

namespace conewalk {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

/// Verbosity from the CONEWALK_LOG environment variable (error|warn|info|debug),
/// parsed once. Controls stderr logging only, never results.
LogLevel log_level();

void log(LogLevel level, const std::string& message);

}  // namespace conewalk

#endif
