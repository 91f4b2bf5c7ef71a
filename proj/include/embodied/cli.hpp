#pragma once

namespace embodied {

/// Entry point of the command-line tool. Returns the process exit status:
/// 0 success, 1 usage, 2 invalid data, 3 numeric failure.
int run_cli(int argc, char** argv);

}  // namespace embodied
