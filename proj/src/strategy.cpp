#include "ftcad/strategy.hpp"

#include "ftcad/error.hpp"

#include <bit>
#include <cstdio>
#include <set>

namespace ftcad {

Mask pipeline_mask(const DependencyGraph &graph, const Pipeline &pipeline) {
  Mask mask = 0;
  for (const auto &key : pipeline.members) {
    const Node *node = graph.find(key);
    if (!node || node->kind != NodeKind::ProcessingElement)
      continue;
    if (!node->pe_id)
      throw Error(ErrorCode::MissingId,
                  "processing element '" + key + "' has no ID", key);
    mask |= *node->pe_id;
  }
  return mask;
}

std::map<Mask, std::string> pe_directory(const DependencyGraph &graph) {
  std::map<Mask, std::string> dir;
  for (const auto &node : graph.nodes)
    if (node.kind == NodeKind::ProcessingElement && node.pe_id)
      dir.emplace(*node.pe_id, node.key);
  return dir;
}

ReliabilityOptions build_options(const DependencyGraph &graph, double t_ref,
                                 const ExtractOptions &extract) {
  auto pipelines = extract_pipelines(graph, extract);
  auto ranked = rank_pipelines(graph, pipelines, t_ref);
  ReliabilityOptions out;
  out.t_ref = t_ref;
  out.pe_directory = pe_directory(graph);
  std::set<Mask> seen;
  for (auto &r : ranked) {
    Mask m = pipeline_mask(graph, r.pipeline);
    if (!seen.insert(m).second)
      continue;
    out.options.push_back(m);
    out.ranked.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> decode_mask(const std::map<Mask, std::string> &directory,
                                     Mask mask) {
  std::vector<std::string> keys;
  while (mask) {
    Mask bit = mask & (~mask + 1);
    auto it = directory.find(bit);
    if (it == directory.end())
      throw Error(ErrorCode::UnknownBit,
                  "bit " + std::to_string(std::countr_zero(bit)) +
                      " has no processing element");
    keys.push_back(it->second);
    mask &= mask - 1;
  }
  return keys;
}

std::string hex_mask(Mask mask) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%X", mask);
  return buf;
}

} // namespace ftcad
