#pragma once

#include <iostream>
#include <sstream>

namespace pace {

// Progress lines on stderr when PACE_TRACE is set in the environment.
bool trace_enabled();

template <typename... Args>
void trace(const Args&... args) {
  if (!trace_enabled()) return;
  std::ostringstream s;
  s << "[pace] ";
  (s << ... << args);
  s << '\n';
  std::cerr << s.str();
}

}  // namespace pace
