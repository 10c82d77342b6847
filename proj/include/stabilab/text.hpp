#pragma once

#include <string>

namespace stabilab {

/// Shortest exact decimal for a double (17 significant digits); the
/// formatting used everywhere a report file must round-trip bit-exactly.
std::string format_g17(double v);

/// RFC-4180-style quoting: wraps the field in quotes when it contains a
/// comma, quote, or newline, doubling embedded quotes.
std::string csv_escape(const std::string& field);

}  // namespace stabilab
