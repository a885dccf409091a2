#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vsr::app {

enum ExitCode { Success = 0, RuntimeFailure = 1, UsageFailure = 2 };

// Runs the vsr3d command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace vsr::app
