#pragma once

#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

namespace amplasso::csv {

/// Shortest form that round-trips a double (17 significant digits).
inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string num(long long v) { return std::to_string(v); }
inline std::string num(unsigned long long v) { return std::to_string(v); }
inline std::string num(int v) { return std::to_string(v); }
inline std::string num(std::size_t v) { return std::to_string(v); }

inline void row(std::ostream& os, std::initializer_list<std::string> fields) {
    bool first = true;
    for (const auto& f : fields) {
        if (!first) os << ',';
        os << f;
        first = false;
    }
    os << '\n';
}

inline void header(std::ostream& os, std::string_view columns) { os << columns << '\n'; }

} // namespace amplasso::csv
