#include "ftcad/graph_io.hpp"

#include "ftcad/error.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace ftcad {

using ojson = nlohmann::ordered_json;

namespace {

struct CategoryEntry {
  std::string_view category;
  NodeKind kind;
};

constexpr std::array<CategoryEntry, 12> kCategories{{
    {"sensor", NodeKind::Sensor},
    {"actuator", NodeKind::Actuator},
    {"Module", NodeKind::ProcessingElement},
    {"DV", NodeKind::DataVariable},
    {"MDV", NodeKind::ManagementDataVariable},
    {"OR", NodeKind::GateOr},
    {"AND", NodeKind::GateAnd},
    {"XOR", NodeKind::GateXor},
    {"DEMUX", NodeKind::GateDemux},
    {"Start", NodeKind::Start},
    {"End", NodeKind::End},
    {"label", NodeKind::Comment},
}};

std::string_view category_of(NodeKind kind) {
  for (const auto &e : kCategories)
    if (e.kind == kind)
      return e.category;
  return "label";
}

std::optional<NodeKind> kind_of(std::string_view category) {
  for (const auto &e : kCategories)
    if (e.category == category)
      return e.kind;
  return std::nullopt;
}

[[noreturn]] void schema_error(const std::string &message,
                               const std::string &key = {}) {
  throw Error(ErrorCode::Schema, message, key);
}

ojson parse_json(std::string_view text, const ParseLimits &limits) {
  if (text.size() > limits.max_bytes)
    throw Error(ErrorCode::Syntax,
                "document exceeds " + std::to_string(limits.max_bytes) +
                    " bytes",
                {}, limits.max_bytes);
  try {
    return ojson::parse(text.begin(), text.end());
  } catch (const ojson::parse_error &e) {
    throw Error(ErrorCode::Syntax,
                "malformed JSON at byte " + std::to_string(e.byte), {},
                e.byte);
  }
}

std::optional<double> parse_number_text(std::string_view text) {
  while (!text.empty() && text.front() == ' ')
    text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ')
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+')
    text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    return std::nullopt;
  return value;
}

// Numbers may be written as JSON numbers or numeric strings ("Rel": "0.999").
double number_field(const ojson &value, const std::string &field,
                     const std::string &key) {
  if (value.is_number())
    return value.get<double>();
  if (value.is_string())
    if (auto v = parse_number_text(value.get<std::string>()))
      return *v;
  schema_error("field '" + field + "' is not a number", key);
}

std::uint32_t parse_pe_id(const ojson &value, const std::string &key) {
  if (value.is_number_unsigned()) {
    auto v = value.get<std::uint64_t>();
    if (v > std::numeric_limits<std::uint32_t>::max())
      schema_error("ID exceeds 32 bits", key);
    return static_cast<std::uint32_t>(v);
  }
  if (!value.is_string())
    schema_error("ID must be hex text", key);
  std::string_view text = value.get_ref<const std::string &>();
  if (text.starts_with("0x") || text.starts_with("0X"))
    text.remove_prefix(2);
  std::uint64_t v = 0;
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), v, 16);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
    schema_error("bad ID hex '" + value.get<std::string>() + "'", key);
  if (v > std::numeric_limits<std::uint32_t>::max())
    schema_error("ID exceeds 32 bits", key);
  return static_cast<std::uint32_t>(v);
}

std::optional<Position> parse_loc(const std::string &text) {
  std::istringstream in(text);
  std::string xs, ys, rest;
  if (!(in >> xs >> ys) || (in >> rest))
    return std::nullopt;
  auto x = parse_number_text(xs);
  auto y = parse_number_text(ys);
  if (!x || !y)
    return std::nullopt;
  return Position{*x, *y};
}

std::string required_string(const ojson &record, const char *field,
                            const std::string &where) {
  auto it = record.find(field);
  if (it == record.end())
    schema_error(where + " lacks '" + field + "'");
  if (it->is_string())
    return it->get<std::string>();
  if (it->is_number_integer())
    return it->dump();
  schema_error(where + " field '" + field + "' must be a string");
}

Node parse_node(const ojson &record) {
  if (!record.is_object())
    schema_error("node record must be an object");
  Node node;
  node.key = required_string(record, "key", "node record");
  auto category = required_string(record, "category", "node '" + node.key + "'");
  auto kind = kind_of(category);
  if (!kind)
    schema_error("unknown category '" + category + "'", node.key);
  node.kind = *kind;

  ReliabilityAttrs attrs;
  bool has_attrs = false;
  for (const auto &[field, value] : record.items()) {
    if (field == "key" || field == "category")
      continue;
    if (field == "name" && value.is_string()) {
      node.name = value.get<std::string>();
    } else if (field == "loc" && value.is_string() &&
               parse_loc(value.get<std::string>())) {
      node.position = parse_loc(value.get<std::string>());
    } else if (field == "Rel") {
      double rel = number_field(value, field, node.key);
      if (!(rel >= 0.0 && rel <= 1.0))
        schema_error("reliability out of [0,1]", node.key);
      attrs.static_rel = rel;
      has_attrs = true;
    } else if (field == "lambdaHw" || field == "lambdaSw") {
      double rate = number_field(value, field, node.key);
      if (!std::isfinite(rate) || rate < 0.0)
        schema_error("failure rate must be finite and non-negative",
                     node.key);
      (field == "lambdaHw" ? attrs.lambda_hw : attrs.lambda_sw) = rate;
      has_attrs = true;
    } else if (field == "id") {
      node.pe_id = parse_pe_id(value, node.key);
    } else if (field == "k" && node.kind == NodeKind::GateOr) {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 1 ||
          value.get<std::int64_t>() > 1024)
        schema_error("OR gate 'k' must be a positive integer", node.key);
      node.or_k = value.get<int>();
    } else {
      node.extra.emplace(field, value.dump());
    }
  }
  if (has_attrs)
    node.attrs = attrs;
  return node;
}

Link parse_link(const ojson &record) {
  if (!record.is_object())
    schema_error("link record must be an object");
  Link link;
  link.from = required_string(record, "from", "link record");
  link.to = required_string(record, "to", "link record");
  for (const auto &[field, value] : record.items()) {
    if (field == "from" || field == "to")
      continue;
    if (field == "fromPort" && value.is_string())
      link.from_port = value.get<std::string>();
    else if (field == "toPort" && value.is_string())
      link.to_port = value.get<std::string>();
    else
      link.extra.emplace(field, value.dump());
  }
  return link;
}

std::string hex_id(std::uint32_t id) {
  std::array<char, 16> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), id, 16);
  return "0x" + std::string(buf.data(), ptr);
}

void put_extra(ojson &out, const std::map<std::string, std::string> &extra) {
  for (const auto &[field, text] : extra)
    out[field] = ojson::parse(text);
}

} // namespace

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

DependencyGraph parse_graph_document(std::string_view text,
                                     const ParseLimits &limits) {
  ojson doc = parse_json(text, limits);
  if (!doc.is_object())
    schema_error("graph document must be a JSON object");
  auto nodes = doc.find("nodeDataArray");
  auto links = doc.find("linkDataArray");
  if (nodes == doc.end() || !nodes->is_array())
    schema_error("missing array 'nodeDataArray'");
  if (links == doc.end() || !links->is_array())
    schema_error("missing array 'linkDataArray'");

  DependencyGraph graph;
  std::unordered_set<std::string> keys;
  for (const auto &record : *nodes) {
    Node node = parse_node(record);
    if (!keys.insert(node.key).second)
      schema_error("duplicate node key '" + node.key + "'", node.key);
    graph.nodes.push_back(std::move(node));
  }
  for (const auto &record : *links)
    graph.links.push_back(parse_link(record));
  return graph;
}

std::string serialize_graph_document(const DependencyGraph &graph) {
  ojson doc = ojson::object();
  doc["nodeDataArray"] = ojson::array();
  doc["linkDataArray"] = ojson::array();
  for (const auto &node : graph.nodes) {
    ojson rec = ojson::object();
    rec["category"] = category_of(node.kind);
    rec["key"] = node.key;
    if (!node.name.empty())
      rec["name"] = node.name;
    if (node.position)
      rec["loc"] = format_double(node.position->x) + " " +
                   format_double(node.position->y);
    if (node.attrs) {
      rec["Rel"] = format_double(node.attrs->static_rel);
      if (node.attrs->lambda_hw)
        rec["lambdaHw"] = *node.attrs->lambda_hw;
      if (node.attrs->lambda_sw)
        rec["lambdaSw"] = *node.attrs->lambda_sw;
    }
    if (node.pe_id)
      rec["id"] = hex_id(*node.pe_id);
    if (node.kind == NodeKind::GateOr)
      rec["k"] = node.or_k;
    put_extra(rec, node.extra);
    doc["nodeDataArray"].push_back(std::move(rec));
  }
  for (const auto &link : graph.links) {
    ojson rec = ojson::object();
    rec["from"] = link.from;
    rec["to"] = link.to;
    rec["fromPort"] = link.from_port;
    rec["toPort"] = link.to_port;
    put_extra(rec, link.extra);
    doc["linkDataArray"].push_back(std::move(rec));
  }
  return doc.dump(2) + "\n";
}

namespace {

std::vector<std::uint32_t> masks_from_array(const ojson &array) {
  std::vector<std::uint32_t> masks;
  masks.reserve(array.size());
  for (const auto &v : array) {
    if (!v.is_number_integer())
      throw Error(ErrorCode::Value, "option entries must be integers");
    if (v.is_number_unsigned()) {
      auto u = v.get<std::uint64_t>();
      if (u > std::numeric_limits<std::uint32_t>::max())
        throw Error(ErrorCode::Value,
                    "option " + std::to_string(u) + " exceeds 32 bits");
      masks.push_back(static_cast<std::uint32_t>(u));
    } else {
      auto s = v.get<std::int64_t>();
      if (s < 0)
        throw Error(ErrorCode::Value,
                    "option " + std::to_string(s) + " is negative");
      masks.push_back(static_cast<std::uint32_t>(s));
    }
  }
  return masks;
}

} // namespace

std::vector<std::uint32_t> parse_options_document(std::string_view text,
                                                  const ParseLimits &limits) {
  if (text.size() > limits.max_bytes)
    throw Error(ErrorCode::Syntax, "document too large", {}, limits.max_bytes);
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') {
    std::size_t next = text.find_first_not_of(" \t\r\n", first + 1);
    if (next != std::string_view::npos && text[next] != '"' &&
        text[next] != '}') {
      // Brace-wrapped list: "{[9, 10, 12]}" or "{9, 10, 12}".
      std::size_t last = text.find_last_not_of(" \t\r\n");
      if (text[last] != '}')
        throw Error(ErrorCode::Syntax, "unterminated option list", {}, last);
      std::string_view inner = text.substr(first + 1, last - first - 1);
      std::string array_text =
          (text[next] == '[') ? std::string(inner) : "[" + std::string(inner) + "]";
      ojson array;
      try {
        array = ojson::parse(array_text);
      } catch (const ojson::parse_error &e) {
        throw Error(ErrorCode::Syntax,
                    "malformed option list near byte " +
                        std::to_string(first + 1 + e.byte),
                    {}, first + 1 + e.byte);
      }
      if (!array.is_array())
        throw Error(ErrorCode::Syntax, "option list is not an array", {},
                    next);
      return masks_from_array(array);
    }
  }
  ojson doc = parse_json(text, limits);
  if (doc.is_array())
    return masks_from_array(doc);
  if (!doc.is_object() || !doc.contains("options") ||
      !doc["options"].is_array())
    throw Error(ErrorCode::Syntax, "expected an object with array 'options'",
                {}, 0);
  return masks_from_array(doc["options"]);
}

std::string serialize_options_document(const std::vector<std::uint32_t> &masks,
                                       bool paper_compat) {
  std::string out = paper_compat ? "{[" : "{\"options\":[";
  const char *sep = paper_compat ? ", " : ",";
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (i)
      out += sep;
    out += std::to_string(masks[i]);
  }
  out += "]}";
  return out;
}

std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'",
                path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path &path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'",
                path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

} // namespace ftcad
