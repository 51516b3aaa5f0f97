#pragma once

#define WPLAB_VERSION "0.1.0"

namespace wplab {

inline const char* version() { return WPLAB_VERSION; }

} // namespace wplab
