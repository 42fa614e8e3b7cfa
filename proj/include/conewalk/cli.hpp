#ifndef CONEWALK_CLI_HPP
#define CONEWALK_CLI_HPP

namespace conewalk {

/// Subcommand dispatch for the conewalk tool.
/// Exit codes: 0 success, 1 validation failure, 2 runtime failure,
/// 3 a requested check failed.
int run_cli(int argc, const char* const* argv);

}  // namespace conewalk

#endif
