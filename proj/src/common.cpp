#include "metareduce/common.hpp"

#include <cstdio>
#include <cstdlib>

namespace metareduce {

std::string format_exact(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string format_report(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + s.size()) return std::nullopt;
    return v;
}

std::optional<long long> parse_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* begin = s.c_str();
    char* end = nullptr;
    long long v = std::strtoll(begin, &end, 10);
    if (end != begin + s.size()) return std::nullopt;
    return v;
}

}  // namespace metareduce
