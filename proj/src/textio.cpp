#include "bvlab/textio.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>

#include "bvlab/error.hpp"

namespace bvlab::textio {

namespace {

std::string printf_double(const char* fmt, double v) {
    char buf[64];
    const int n = std::snprintf(buf, sizeof buf, fmt, v);
    return std::string(buf, static_cast<std::size_t>(n));
}

} // namespace

std::string hex(double v) { return printf_double("%a", v); }
std::string exact(double v) { return printf_double("%.17g", v); }
std::string sig6(double v) { return printf_double("%.6g", v); }

double parse_double(std::string_view s) {
    const std::string str(trim(s));
    if (str.empty()) throw ArgumentError("empty numeric field");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(str.c_str(), &end);
    if (end != str.c_str() + str.size()) throw ArgumentError("malformed number '" + str + "'");
    return v;
}

std::uint64_t parse_u64(std::string_view s) {
    const std::string str(trim(s));
    if (str.empty() || str[0] == '-') throw ArgumentError("malformed unsigned integer '" + str + "'");
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(str.c_str(), &end, 10);
    if (end != str.c_str() + str.size() || errno == ERANGE)
        throw ArgumentError("malformed unsigned integer '" + str + "'");
    return v;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            return out;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string join_hex(std::span<const double> values, char sep) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += sep;
        out += hex(values[i]);
    }
    return out;
}

std::vector<double> parse_doubles(std::string_view s, char sep) {
    std::vector<double> out;
    if (trim(s).empty()) return out;
    for (const auto& tok : split(trim(s), sep)) out.push_back(parse_double(tok));
    return out;
}

} // namespace bvlab::textio
