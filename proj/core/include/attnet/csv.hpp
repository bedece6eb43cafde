#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace attnet::csv {

// Splits one RFC 4180 record. Quoted fields may contain the delimiter and
// doubled quotes; embedded newlines are not supported.
std::vector<std::string> split(std::string_view line, char delim = ',');

// Quotes the field when it contains the delimiter, a quote, or a newline.
std::string escape(std::string_view field, char delim = ',');

// Reads a line and strips a trailing '\r'. Returns false at end of input.
bool read_line(std::istream& in, std::string& line);

// Shortest round-trip decimal for doubles; "nan" for NaN.
std::string format_double(double v);

}  // namespace attnet::csv
