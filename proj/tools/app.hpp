#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace resetfd::app {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,  // ran to completion but a check or design target failed
  kParse = 2,
  kValidation = 3,
  kPrecondition = 4,
  kNumerical = 5,
  kConvergence = 6,
};

/// Entry point shared by the executable and the in-process tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace resetfd::app
