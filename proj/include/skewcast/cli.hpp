#pragma once

namespace skewcast {

// Entry point of the `skewcast` executable. Returns the process exit code:
// 0 on success, 2 for configuration or I/O errors, 3 for data errors.
int run_cli(int argc, char** argv);

}  // namespace skewcast
