#pragma once

#include <charconv>
#include <string>

namespace fanflow {

// Shortest round-trip decimal form, locale independent.
inline std::string format_double(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

}  // namespace fanflow
