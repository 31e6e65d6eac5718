#pragma once

// Dependency-graph model: typed nodes (sensors, processing elements, data
// variables, dependency gates, actuators) joined by directed links.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ftcad {

enum class NodeKind {
  Sensor,
  Actuator,
  ProcessingElement,
  DataVariable,
  ManagementDataVariable,
  GateOr,
  GateAnd,
  GateXor,
  GateDemux,
  Start,
  End,
  Comment,
};

std::string_view to_string(NodeKind kind);

bool is_gate(NodeKind kind);

/// Nodes that can be members of a pipeline: everything except gates,
/// Start/End delimiters and comments.
bool is_member_kind(NodeKind kind);

/// Failure rates are in failures per million hours.
struct ReliabilityAttrs {
  std::optional<double> lambda_hw;
  std::optional<double> lambda_sw;
  double static_rel = 1.0;

  friend bool operator==(const ReliabilityAttrs &,
                         const ReliabilityAttrs &) = default;
};

struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position &, const Position &) = default;
};

struct Node {
  std::string key;
  NodeKind kind = NodeKind::DataVariable;
  /// Required input count for GateOr; 1 for every other kind.
  int or_k = 1;
  std::string name;
  std::optional<ReliabilityAttrs> attrs;
  /// One-hot processing-element identifier.
  std::optional<std::uint32_t> pe_id;
  std::optional<Position> position;
  /// Record fields the model does not interpret, kept as serialized JSON
  /// values so a document round-trips unchanged.
  std::map<std::string, std::string> extra;

  /// Display name, falling back to the key.
  const std::string &label() const { return name.empty() ? key : name; }

  friend bool operator==(const Node &, const Node &) = default;
};

struct Link {
  std::string from;
  std::string to;
  std::string from_port = "out";
  std::string to_port = "in";
  std::map<std::string, std::string> extra;

  friend bool operator==(const Link &, const Link &) = default;
};

struct DependencyGraph {
  std::vector<Node> nodes;
  std::vector<Link> links;

  const Node *find(std::string_view key) const;
  Node *find(std::string_view key);

  friend bool operator==(const DependencyGraph &,
                         const DependencyGraph &) = default;
};

/// Index-based adjacency view over a graph. Links touching unknown keys are
/// skipped; comments keep their slot but never get edges.
class GraphIndex {
public:
  explicit GraphIndex(const DependencyGraph &graph);

  std::size_t size() const { return graph_->nodes.size(); }
  const Node &node(std::size_t i) const { return graph_->nodes[i]; }
  std::optional<std::size_t> index_of(std::string_view key) const;

  /// Predecessors in link order.
  const std::vector<std::size_t> &inputs(std::size_t i) const {
    return in_[i];
  }
  const std::vector<std::size_t> &outputs(std::size_t i) const {
    return out_[i];
  }

  /// Topological order with ties broken by key. Empty if the graph has a
  /// cycle.
  std::vector<std::size_t> topo_order() const;

private:
  const DependencyGraph *graph_;
  std::unordered_map<std::string, std::size_t> by_key_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
};

struct Violation {
  std::string rule;
  std::string key;
  std::string message;

  friend bool operator==(const Violation &, const Violation &) = default;
};

using ValidationReport = std::vector<Violation>;

/// Checks structural well-formedness. Violations are returned as data.
ValidationReport validate_graph(const DependencyGraph &graph);

/// Adds (or completes) the Start and End delimiters. Throws InvalidGraph if
/// the graph does not validate.
DependencyGraph normalize_graph(const DependencyGraph &graph);

/// lambda_hw + lambda_sw, missing values counting as zero. Throws NoAttrs.
double effective_lambda(const Node &node);

bool is_one_hot(std::uint32_t value);

} // namespace ftcad
