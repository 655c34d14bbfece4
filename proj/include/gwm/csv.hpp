#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace gwm::csv {

// Minimal RFC 4180 reader: comma separated, double-quoted fields with "" escapes.
// Records spanning several physical lines are not supported.
std::vector<std::string> split_line(std::string_view line);

/// Quotes `field` when it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Reads one line, stripping a trailing '\r' and a leading UTF-8 BOM on the first line.
bool read_line(std::istream& in, std::string& line, bool first);

std::string trim(std::string_view s);

/// Splits on `sep` without quote handling.
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace gwm::csv
