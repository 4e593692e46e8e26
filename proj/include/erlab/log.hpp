#pragma once

#include <functional>
#include <string>

namespace erlab {

/// Receives non-fatal warnings. Defaults to a "warning: ..." line on stderr.
using WarningSink = std::function<void(const std::string&)>;

/// Installs a sink and returns the previous one. An empty sink drops warnings.
WarningSink set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace erlab
