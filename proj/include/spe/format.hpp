#pragma once

#include <cstdio>
#include <string>

namespace spe {

// Full round-trip precision for CSV/JSON payloads.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace spe
