#pragma once

#include <iosfwd>

namespace erlab {

/// Exit codes: 0 success, 1 validation or usage error, 2 numerical failure.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_main(int argc, const char* const* argv);

}  // namespace erlab
