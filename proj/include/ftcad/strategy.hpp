#pragma once

#include "ftcad/graph.hpp"
#include "ftcad/pipeline.hpp"
#include "ftcad/reliability.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ftcad {

using Mask = std::uint32_t;

/// The exported reconfiguration strategy: one mask of working-PE IDs per
/// pipeline, most reliable first.
struct ReliabilityOptions {
  std::vector<Mask> options;
  /// Every PE ID in the graph, including PEs absent from all pipelines.
  std::map<Mask, std::string> pe_directory;
  double t_ref = kDefaultReferenceHours;
  /// Pipelines behind each option, parallel to `options`.
  std::vector<RankedPipeline> ranked;
};

/// OR of the pipeline's PE IDs. Throws MissingId.
Mask pipeline_mask(const DependencyGraph &graph, const Pipeline &pipeline);

/// Extract, rank and encode. Masks that repeat a better-ranked mask are
/// dropped.
ReliabilityOptions build_options(const DependencyGraph &graph,
                                 double t_ref = kDefaultReferenceHours,
                                 const ExtractOptions &extract = {});

/// PE keys whose bits are set, ascending by bit index. Throws UnknownBit.
std::vector<std::string> decode_mask(const std::map<Mask, std::string> &directory,
                                     Mask mask);

std::map<Mask, std::string> pe_directory(const DependencyGraph &graph);

std::string hex_mask(Mask mask);

} // namespace ftcad
