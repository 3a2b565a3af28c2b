#pragma once

#include <filesystem>
#include <string>

#include "dgrel/netmodel.hpp"

namespace dgrel {

/// Parses a network description (JSON). Throws ParseError naming the line
/// for syntax errors and the JSON path for field errors. Cross references
/// are resolved; the returned network has no dangling ids.
Network parse_network(const std::string& document);

/// Reads and parses `path`. Throws std::system_error when the file cannot be read.
Network load_network(const std::filesystem::path& path);

/// Canonical JSON text; parse_network(serialize_network(n)) == n.
std::string serialize_network(const Network& net);

}  // namespace dgrel
