#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bvlab::textio {

/// Hexadecimal float ("%a"), exact round-trip through parse_double.
std::string hex(double v);
/// Shortest decimal that round-trips ("%.17g").
std::string exact(double v);
/// Six significant digits ("%.6g"), used in reports.
std::string sig6(double v);

double parse_double(std::string_view s);
std::uint64_t parse_u64(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

std::string join_hex(std::span<const double> values, char sep = ' ');
std::vector<double> parse_doubles(std::string_view s, char sep = ' ');

} // namespace bvlab::textio
