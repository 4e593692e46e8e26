#include "erlab/log.hpp"

#include <iostream>
#include <mutex>

namespace erlab {
namespace {

std::mutex sink_mutex;
WarningSink current_sink = [](const std::string& message) { std::cerr << "warning: " << message << '\n'; };

}  // namespace

WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard lock(sink_mutex);
  std::swap(current_sink, sink);
  return sink;
}

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex);
  if (current_sink) current_sink(message);
}

}  // namespace erlab
