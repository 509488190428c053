#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mvx::cli {

// Runs one mvx invocation. Exit codes: 0 success, 1 the analysis ran but
// the answer is negative (violations, triggers, failed constraints,
// pending decisions), 2 usage or operational error, 3 corrupt repository.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace mvx::cli
