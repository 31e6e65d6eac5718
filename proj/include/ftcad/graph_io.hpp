#pragma once

// Text persistence for dependency graphs and reliability-options strategies.

#include "ftcad/graph.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ftcad {

struct ParseLimits {
  std::size_t max_bytes = 16u << 20;
};

/// Reads a graph document (nodeDataArray / linkDataArray). Throws SyntaxError
/// with a byte offset, or SchemaError naming the offending record key.
DependencyGraph parse_graph_document(std::string_view text,
                                     const ParseLimits &limits = {});

/// Canonical form: fixed record key order, document node/link order, two
/// space indentation, LF newlines, trailing newline.
std::string serialize_graph_document(const DependencyGraph &graph);

/// Accepts {"options":[...]} and the brace-wrapped list "{[9, 10, 12]}".
std::vector<std::uint32_t> parse_options_document(std::string_view text,
                                                  const ParseLimits &limits = {});

/// Canonical {"options":[...]} or, with paper_compat, "{[a, b, c]}".
std::string serialize_options_document(const std::vector<std::uint32_t> &masks,
                                       bool paper_compat = false);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, std::string_view text);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

} // namespace ftcad
