#pragma once

#include "ftcad/graph.hpp"

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ftcad {

/// A minimal set of nodes whose joint liveness keeps one actuator supplied.
struct Pipeline {
  std::string sink;
  /// Member keys, sorted. Gates and delimiters are never members.
  std::vector<std::string> members;
  /// Members in topological order, ties broken by key.
  std::vector<std::string> sequence;
  /// 1-based discovery rank across all sinks.
  std::size_t index = 0;

  friend bool operator==(const Pipeline &, const Pipeline &) = default;
};

struct ExtractOptions {
  std::size_t max_pipelines = 4096;
};

/// Enumerates every minimal pipeline for each actuator, sinks in key order.
/// Gate semantics: AND joins all inputs, OR(k) needs any k inputs, XOR is
/// analysed as OR(1), DEMUX passes its input through. Plain nodes with several
/// inputs need all of them.
///
/// Accepts raw or normalized graphs. Throws CycleError, InvalidGraph,
/// UnreachableSink, or ExplosionError once any intermediate alternative list
/// exceeds `max_pipelines`.
std::vector<Pipeline> extract_pipelines(const DependencyGraph &graph,
                                        const ExtractOptions &options = {});

/// Index-based evaluator of the graph's gate logic, reusable across many
/// liveness states.
class StructureFunction {
public:
  /// `graph` must be normalized and outlive the evaluator.
  explicit StructureFunction(const DependencyGraph &graph);

  const GraphIndex &index() const { return index_; }

  /// Indices of nodes that may be members, in document order.
  const std::vector<std::size_t> &member_nodes() const { return members_; }

  /// `alive[i]` gives the state of node i; entries for non-member nodes are
  /// ignored.
  bool operational(const std::vector<char> &alive, std::size_t sink) const;

private:
  GraphIndex index_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> members_;
};

/// True when the sink receives data with only `alive` members working.
bool is_operational(const DependencyGraph &graph,
                    const std::set<std::string> &alive, std::string_view sink);

} // namespace ftcad
