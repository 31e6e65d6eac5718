#include "ftcad/graph.hpp"

#include "ftcad/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <unordered_set>

namespace ftcad {

std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::InvalidGraph: return "InvalidGraph";
  case ErrorCode::Syntax: return "SyntaxError";
  case ErrorCode::Schema: return "SchemaError";
  case ErrorCode::Value: return "ValueError";
  case ErrorCode::NoAttrs: return "NoAttrs";
  case ErrorCode::Domain: return "DomainError";
  case ErrorCode::Cycle: return "CycleError";
  case ErrorCode::UnreachableSink: return "UnreachableSink";
  case ErrorCode::Explosion: return "ExplosionError";
  case ErrorCode::TooLarge: return "TooLarge";
  case ErrorCode::MissingId: return "MissingId";
  case ErrorCode::UnknownBit: return "UnknownBit";
  case ErrorCode::IdCollision: return "IdCollision";
  case ErrorCode::OutOfRange: return "OutOfRange";
  case ErrorCode::UnknownMnemonic: return "UnknownMnemonic";
  case ErrorCode::UnknownPe: return "UnknownPe";
  case ErrorCode::Config: return "ConfigError";
  case ErrorCode::Io: return "IoError";
  }
  return "Error";
}

std::string_view to_string(NodeKind kind) {
  switch (kind) {
  case NodeKind::Sensor: return "Sensor";
  case NodeKind::Actuator: return "Actuator";
  case NodeKind::ProcessingElement: return "ProcessingElement";
  case NodeKind::DataVariable: return "DataVariable";
  case NodeKind::ManagementDataVariable: return "ManagementDataVariable";
  case NodeKind::GateOr: return "GateOr";
  case NodeKind::GateAnd: return "GateAnd";
  case NodeKind::GateXor: return "GateXor";
  case NodeKind::GateDemux: return "GateDemux";
  case NodeKind::Start: return "Start";
  case NodeKind::End: return "End";
  case NodeKind::Comment: return "Comment";
  }
  return "?";
}

bool is_gate(NodeKind kind) {
  return kind == NodeKind::GateOr || kind == NodeKind::GateAnd ||
         kind == NodeKind::GateXor || kind == NodeKind::GateDemux;
}

bool is_member_kind(NodeKind kind) {
  return !is_gate(kind) && kind != NodeKind::Start && kind != NodeKind::End &&
         kind != NodeKind::Comment;
}

bool is_one_hot(std::uint32_t value) { return std::popcount(value) == 1; }

const Node *DependencyGraph::find(std::string_view key) const {
  auto it = std::find_if(nodes.begin(), nodes.end(),
                         [&](const Node &n) { return n.key == key; });
  return it == nodes.end() ? nullptr : &*it;
}

Node *DependencyGraph::find(std::string_view key) {
  auto it = std::find_if(nodes.begin(), nodes.end(),
                         [&](const Node &n) { return n.key == key; });
  return it == nodes.end() ? nullptr : &*it;
}

GraphIndex::GraphIndex(const DependencyGraph &graph)
    : graph_(&graph), in_(graph.nodes.size()), out_(graph.nodes.size()) {
  for (std::size_t i = 0; i < graph.nodes.size(); ++i)
    by_key_.emplace(graph.nodes[i].key, i);
  for (const auto &link : graph.links) {
    auto from = index_of(link.from);
    auto to = index_of(link.to);
    if (!from || !to || *from == *to)
      continue;
    if (graph.nodes[*from].kind == NodeKind::Comment ||
        graph.nodes[*to].kind == NodeKind::Comment)
      continue;
    out_[*from].push_back(*to);
    in_[*to].push_back(*from);
  }
}

std::optional<std::size_t> GraphIndex::index_of(std::string_view key) const {
  auto it = by_key_.find(std::string(key));
  if (it == by_key_.end())
    return std::nullopt;
  return it->second;
}

std::vector<std::size_t> GraphIndex::topo_order() const {
  std::vector<std::size_t> pending(size());
  std::set<std::pair<std::string_view, std::size_t>> ready;
  for (std::size_t i = 0; i < size(); ++i) {
    pending[i] = in_[i].size();
    if (pending[i] == 0)
      ready.emplace(node(i).key, i);
  }
  std::vector<std::size_t> order;
  order.reserve(size());
  while (!ready.empty()) {
    auto [key, i] = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(i);
    for (auto j : out_[i])
      if (--pending[j] == 0)
        ready.emplace(node(j).key, j);
  }
  if (order.size() != size())
    return {};
  return order;
}

namespace {

// Returns a node on a directed cycle, if any.
std::optional<std::size_t> find_cycle(const GraphIndex &idx) {
  enum class Mark { White, Grey, Black };
  std::vector<Mark> mark(idx.size(), Mark::White);
  for (std::size_t root = 0; root < idx.size(); ++root) {
    if (mark[root] != Mark::White)
      continue;
    // Iterative DFS: (node, next child position).
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    mark[root] = Mark::Grey;
    while (!stack.empty()) {
      auto &[v, pos] = stack.back();
      const auto &succ = idx.outputs(v);
      if (pos < succ.size()) {
        auto w = succ[pos++];
        if (mark[w] == Mark::Grey)
          return w;
        if (mark[w] == Mark::White) {
          mark[w] = Mark::Grey;
          stack.emplace_back(w, 0);
        }
      } else {
        mark[v] = Mark::Black;
        stack.pop_back();
      }
    }
  }
  return std::nullopt;
}

void check_attrs(const Node &node, ValidationReport &report) {
  if (!node.attrs)
    return;
  const auto &a = *node.attrs;
  auto bad_rate = [](const std::optional<double> &v) {
    return v && (!std::isfinite(*v) || *v < 0.0);
  };
  if (bad_rate(a.lambda_hw) || bad_rate(a.lambda_sw))
    report.push_back({"attrs-range", node.key,
                      "failure rate must be finite and non-negative"});
  if (!(a.static_rel >= 0.0 && a.static_rel <= 1.0))
    report.push_back(
        {"attrs-range", node.key, "reliability factor must lie in [0,1]"});
  if (a.lambda_sw && node.kind != NodeKind::ProcessingElement)
    report.push_back({"attrs-sw-rate", node.key,
                      "software failure rate is only valid on processing "
                      "elements"});
}

} // namespace

ValidationReport validate_graph(const DependencyGraph &graph) {
  ValidationReport report;

  std::unordered_set<std::string> seen;
  for (const auto &node : graph.nodes)
    if (!seen.insert(node.key).second)
      report.push_back({"duplicate-key", node.key, "node key is not unique"});

  bool has_sensor = false, has_actuator = false;
  int starts = 0, ends = 0;
  std::unordered_map<std::uint32_t, std::string> ids;
  for (const auto &node : graph.nodes) {
    has_sensor |= node.kind == NodeKind::Sensor;
    has_actuator |= node.kind == NodeKind::Actuator;
    starts += node.kind == NodeKind::Start;
    ends += node.kind == NodeKind::End;

    if (node.pe_id) {
      if (node.kind != NodeKind::ProcessingElement) {
        report.push_back({"pe-id-on-non-pe", node.key,
                          "only processing elements carry an ID"});
      } else if (!is_one_hot(*node.pe_id)) {
        report.push_back({"pe-id-not-one-hot", node.key,
                          "ID must have exactly one bit set"});
      } else if (auto [it, fresh] = ids.emplace(*node.pe_id, node.key);
                 !fresh) {
        report.push_back({"pe-id-duplicate", node.key,
                          "ID already used by " + it->second});
      }
    }
    if (node.attrs && !is_member_kind(node.kind))
      report.push_back({"attrs-on-control-node", node.key,
                        "gates, delimiters and comments carry no reliability "
                        "attributes"});
    check_attrs(node, report);
    if (node.kind == NodeKind::GateOr && node.or_k < 1)
      report.push_back({"gate-or-k", node.key, "OR gate needs k >= 1"});
    if (node.kind != NodeKind::GateOr && node.or_k != 1)
      report.push_back({"gate-param", node.key,
                        "only OR gates take an input count"});
  }
  if (!has_sensor || !has_actuator)
    report.push_back({"no-source-sink", "",
                      "graph needs at least one sensor and one actuator"});
  if (starts > 1)
    report.push_back({"duplicate-start", "", "more than one Start node"});
  if (ends > 1)
    report.push_back({"duplicate-end", "", "more than one End node"});

  std::set<std::pair<std::string, std::string>> link_pairs;
  for (const auto &link : graph.links) {
    const Node *from = graph.find(link.from);
    const Node *to = graph.find(link.to);
    std::string id = link.from + "->" + link.to;
    if (!from || !to) {
      report.push_back({"dangling-link", id, "link endpoint does not exist"});
      continue;
    }
    if (link.from == link.to) {
      report.push_back({"self-loop", id, "link connects a node to itself"});
      continue;
    }
    if (!link_pairs.emplace(link.from, link.to).second)
      report.push_back({"duplicate-link", id, "link appears twice"});
    if (from->kind == NodeKind::Comment || to->kind == NodeKind::Comment)
      report.push_back({"comment-link", id, "comments cannot be linked"});
    if (to->kind == NodeKind::Start)
      report.push_back({"start-input", id, "Start cannot have inputs"});
    if (from->kind == NodeKind::End)
      report.push_back({"end-output", id, "End cannot have outputs"});
    if (to->kind == NodeKind::Sensor && from->kind != NodeKind::Start)
      report.push_back({"sensor-input", id, "sensors are data sources"});
    if (from->kind == NodeKind::Actuator && to->kind != NodeKind::End)
      report.push_back({"actuator-output", id, "actuators are data sinks"});
    if (from->kind == NodeKind::Start && to->kind == NodeKind::End)
      report.push_back({"start-end-link", id, "Start cannot feed End"});
  }

  GraphIndex idx(graph);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Node &node = idx.node(i);
    if (!is_gate(node.kind))
      continue;
    auto fan_in = idx.inputs(i).size();
    auto fan_out = idx.outputs(i).size();
    if (fan_in == 0)
      report.push_back({"gate-no-input", node.key, "gate has no inputs"});
    if (fan_out == 0)
      report.push_back({"gate-no-output", node.key, "gate has no outputs"});
    if (node.kind == NodeKind::GateXor && fan_out > 1)
      report.push_back(
          {"gate-xor-fanout", node.key, "XOR gate has exactly one output"});
    if (node.kind == NodeKind::GateDemux && fan_in > 1)
      report.push_back(
          {"gate-demux-fanin", node.key, "DEMUX gate has exactly one input"});
    if (node.kind == NodeKind::GateOr && fan_in > 0 &&
        static_cast<std::size_t>(node.or_k) > fan_in)
      report.push_back(
          {"gate-or-k", node.key, "OR gate requires more inputs than it has"});
  }
  if (auto on_cycle = find_cycle(idx))
    report.push_back(
        {"cycle", idx.node(*on_cycle).key, "graph contains a directed cycle"});
  return report;
}

namespace {

std::string unique_key(const DependencyGraph &graph, const std::string &base) {
  if (!graph.find(base))
    return base;
  for (int n = 1;; ++n) {
    auto candidate = base + "_" + std::to_string(n);
    if (!graph.find(candidate))
      return candidate;
  }
}

} // namespace

DependencyGraph normalize_graph(const DependencyGraph &graph) {
  auto report = validate_graph(graph);
  if (!report.empty())
    throw Error(ErrorCode::InvalidGraph,
                "invalid graph: " + report.front().rule + ": " +
                    report.front().message,
                report.front().key);

  DependencyGraph out = graph;
  auto delimiter = [&](NodeKind kind, const char *base) {
    for (const auto &n : out.nodes)
      if (n.kind == kind)
        return n.key;
    Node node;
    node.key = unique_key(out, base);
    node.kind = kind;
    node.name = base;
    out.nodes.push_back(node);
    return node.key;
  };
  const std::string start = delimiter(NodeKind::Start, "Start");
  const std::string end = delimiter(NodeKind::End, "End");

  std::vector<Link> added;
  {
    GraphIndex idx(out);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const Node &n = idx.node(i);
      if (n.kind == NodeKind::Comment || n.kind == NodeKind::Start ||
          n.kind == NodeKind::End)
        continue;
      if (idx.inputs(i).empty())
        added.push_back({start, n.key, "out", "in", {}});
      if (idx.outputs(i).empty())
        added.push_back({n.key, end, "out", "in", {}});
    }
  }
  // Start links first, End links last, so the listing reads left to right.
  std::stable_partition(added.begin(), added.end(),
                        [&](const Link &l) { return l.from == start; });
  out.links.insert(out.links.end(), added.begin(), added.end());
  return out;
}

double effective_lambda(const Node &node) {
  if (!node.attrs)
    throw Error(ErrorCode::NoAttrs,
                "node '" + node.key + "' has no reliability attributes",
                node.key);
  return node.attrs->lambda_hw.value_or(0.0) +
         node.attrs->lambda_sw.value_or(0.0);
}

} // namespace ftcad
