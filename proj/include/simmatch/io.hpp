#pragma once

#include "simmatch/types.hpp"

#include <string>

namespace simmatch::io {

// Point file format: UTF-8 text, one point per line, coordinates separated by
// whitespace or commas, '#' starts a comment line, blank lines ignored.
// Throws ParseError (with 1-based line number) on malformed input and
// std::invalid_argument when the parsed rows violate PointCloud invariants.
PointCloud read_point_file(const std::string& path);

// Writes with 17 significant digits so a read-back reproduces the doubles exactly.
void write_point_file(const std::string& path, const PointCloud& cloud);

// Config files are JSON objects mirroring MatchConfig field names; missing
// fields keep their defaults, unknown fields are rejected.
MatchConfig read_config_file(const std::string& path);
std::string config_to_json(const MatchConfig& cfg);

// Shortest exact decimal form of a double ("%.17g" fallback semantics).
std::string format_double(double v);

}  // namespace simmatch::io
