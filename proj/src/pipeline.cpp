#include "ftcad/pipeline.hpp"

#include "ftcad/error.hpp"

#include <algorithm>
#include <optional>

namespace ftcad {

namespace {

using MemberSet = std::vector<std::uint32_t>; // sorted node indices
using Family = std::vector<MemberSet>;        // alternatives, discovery order

MemberSet unite(const MemberSet &a, const MemberSet &b) {
  MemberSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(out));
  return out;
}

// Drops duplicates and strict supersets, keeping discovery order.
Family minimize(Family family) {
  Family out;
  out.reserve(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto &candidate = family[i];
    bool dominated = false;
    for (std::size_t j = 0; j < family.size() && !dominated; ++j) {
      if (i == j)
        continue;
      const auto &other = family[j];
      if (other.size() > candidate.size())
        continue;
      if (!std::includes(candidate.begin(), candidate.end(), other.begin(),
                         other.end()))
        continue;
      // Equal sets: the earlier occurrence wins.
      dominated = other.size() < candidate.size() || j < i;
    }
    if (!dominated)
      out.push_back(candidate);
  }
  return out;
}

class Extractor {
public:
  Extractor(const GraphIndex &index, std::size_t cap)
      : index_(index), cap_(cap), memo_(index.size()) {}

  const Family &alternatives(std::size_t node) {
    if (!memo_[node])
      memo_[node] = compute(node);
    return *memo_[node];
  }

private:
  void guard(std::size_t count, std::size_t node) const {
    if (count > cap_)
      throw Error(ErrorCode::Explosion,
                  "pipeline enumeration exceeds " + std::to_string(cap_) +
                      " alternatives at '" + index_.node(node).key + "'",
                  index_.node(node).key);
  }

  Family product(const Family &a, const Family &b, std::size_t node) const {
    guard(a.size() * b.size(), node);
    Family out;
    out.reserve(a.size() * b.size());
    for (const auto &x : a)
      for (const auto &y : b)
        out.push_back(unite(x, y));
    return minimize(std::move(out));
  }

  Family all_of(const std::vector<std::size_t> &inputs, std::size_t node) {
    Family acc{MemberSet{}};
    for (auto in : inputs)
      acc = product(acc, alternatives(in), node);
    return acc;
  }

  Family k_of(const std::vector<std::size_t> &inputs, std::size_t k,
              std::size_t node) {
    Family out;
    if (k == 0 || k > inputs.size())
      return out;
    // k-subsets of input positions in lexicographic order.
    std::vector<std::size_t> pick(k);
    for (std::size_t i = 0; i < k; ++i)
      pick[i] = i;
    while (true) {
      std::vector<std::size_t> chosen;
      for (auto p : pick)
        chosen.push_back(inputs[p]);
      for (auto &alt : all_of(chosen, node))
        out.push_back(std::move(alt));
      guard(out.size(), node);
      std::size_t i = k;
      while (i > 0 && pick[i - 1] == inputs.size() - k + i - 1)
        --i;
      if (i == 0)
        break;
      ++pick[i - 1];
      for (std::size_t j = i; j < k; ++j)
        pick[j] = pick[j - 1] + 1;
    }
    return minimize(std::move(out));
  }

  Family compute(std::size_t node) {
    const Node &n = index_.node(node);
    const auto &inputs = index_.inputs(node);
    switch (n.kind) {
    case NodeKind::Start:
      return Family{MemberSet{}};
    case NodeKind::End:
    case NodeKind::Comment:
      return {};
    case NodeKind::GateAnd:
      return inputs.empty() ? Family{} : all_of(inputs, node);
    case NodeKind::GateOr:
      return k_of(inputs, static_cast<std::size_t>(n.or_k), node);
    case NodeKind::GateXor:
      return k_of(inputs, 1, node);
    case NodeKind::GateDemux:
      return inputs.empty() ? Family{} : all_of(inputs, node);
    default:
      break;
    }
    if (inputs.empty())
      return {};
    Family family = all_of(inputs, node);
    const auto self = static_cast<std::uint32_t>(node);
    for (auto &alt : family)
      alt.insert(std::lower_bound(alt.begin(), alt.end(), self), self);
    return family;
  }

  const GraphIndex &index_;
  std::size_t cap_;
  std::vector<std::optional<Family>> memo_;
};

DependencyGraph checked_normalized(const DependencyGraph &graph) {
  auto report = validate_graph(graph);
  for (const auto &v : report)
    if (v.rule == "cycle")
      throw Error(ErrorCode::Cycle, "graph contains a directed cycle through '" +
                                        v.key + "'",
                  v.key);
  return normalize_graph(graph);
}

} // namespace

std::vector<Pipeline> extract_pipelines(const DependencyGraph &graph,
                                        const ExtractOptions &options) {
  const DependencyGraph normalized = checked_normalized(graph);
  GraphIndex index(normalized);
  const auto order = index.topo_order();

  std::vector<std::size_t> sinks;
  for (std::size_t i = 0; i < index.size(); ++i)
    if (index.node(i).kind == NodeKind::Actuator)
      sinks.push_back(i);
  std::sort(sinks.begin(), sinks.end(), [&](auto a, auto b) {
    return index.node(a).key < index.node(b).key;
  });

  Extractor extractor(index, options.max_pipelines);
  std::vector<Pipeline> out;
  for (auto sink : sinks) {
    const auto &family = extractor.alternatives(sink);
    if (family.empty())
      throw Error(ErrorCode::UnreachableSink,
                  "actuator '" + index.node(sink).key +
                      "' has no satisfiable pipeline",
                  index.node(sink).key);
    for (const auto &alt : family) {
      Pipeline p;
      p.sink = index.node(sink).key;
      for (auto m : alt)
        p.members.push_back(index.node(m).key);
      std::sort(p.members.begin(), p.members.end());
      for (auto i : order)
        if (std::binary_search(alt.begin(), alt.end(),
                               static_cast<std::uint32_t>(i)))
          p.sequence.push_back(index.node(i).key);
      p.index = out.size() + 1;
      out.push_back(std::move(p));
      if (out.size() > options.max_pipelines)
        throw Error(ErrorCode::Explosion,
                    "more than " + std::to_string(options.max_pipelines) +
                        " pipelines");
    }
  }
  return out;
}

StructureFunction::StructureFunction(const DependencyGraph &graph)
    : index_(graph), order_(index_.topo_order()) {
  if (order_.size() != index_.size())
    throw Error(ErrorCode::Cycle, "graph contains a directed cycle");
  for (std::size_t i = 0; i < index_.size(); ++i)
    if (is_member_kind(index_.node(i).kind))
      members_.push_back(i);
}

bool StructureFunction::operational(const std::vector<char> &alive,
                                    std::size_t sink) const {
  std::vector<char> value(index_.size(), 0);
  for (auto i : order_) {
    const Node &n = index_.node(i);
    const auto &inputs = index_.inputs(i);
    std::size_t live_inputs = 0;
    for (auto in : inputs)
      live_inputs += value[in] != 0;
    bool v = false;
    switch (n.kind) {
    case NodeKind::Start:
      v = true;
      break;
    case NodeKind::End:
    case NodeKind::Comment:
      v = false;
      break;
    case NodeKind::GateAnd:
    case NodeKind::GateDemux:
      v = !inputs.empty() && live_inputs == inputs.size();
      break;
    case NodeKind::GateOr:
      v = live_inputs >= static_cast<std::size_t>(n.or_k);
      break;
    case NodeKind::GateXor:
      v = live_inputs >= 1;
      break;
    default:
      v = alive[i] && !inputs.empty() && live_inputs == inputs.size();
      break;
    }
    value[i] = v;
    if (i == sink)
      return v;
  }
  return false;
}

bool is_operational(const DependencyGraph &graph,
                    const std::set<std::string> &alive,
                    std::string_view sink) {
  // Normalizing is idempotent, so raw and normalized graphs both work.
  const DependencyGraph normalized = normalize_graph(graph);
  StructureFunction sf(normalized);
  auto sink_index = sf.index().index_of(sink);
  if (!sink_index)
    return false;
  std::vector<char> state(sf.index().size(), 0);
  for (const auto &key : alive)
    if (auto i = sf.index().index_of(key))
      state[*i] = 1;
  return sf.operational(state, *sink_index);
}

} // namespace ftcad
