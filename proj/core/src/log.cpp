#include "routemix/log.hpp"

#include <iostream>
#include <mutex>

namespace routemix {

namespace {
std::mutex g_mutex;
WarningSink g_sink = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
}  // namespace

WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard lock(g_mutex);
  std::swap(g_sink, sink);
  return sink;
}

void warn(std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (g_sink) g_sink(message);
}

}  // namespace routemix
