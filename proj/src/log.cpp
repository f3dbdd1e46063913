#include "pace/log.hpp"

#include <cstdlib>

namespace pace {

bool trace_enabled() {
  static const bool on = std::getenv("PACE_TRACE") != nullptr;
  return on;
}

}  // namespace pace
