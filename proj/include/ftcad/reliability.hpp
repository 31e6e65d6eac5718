#pragma once

// Exponential-lifetime reliability arithmetic. Time is in hours, failure
// rates in failures per million hours; the 1e6 conversion is applied once
// when a reliability is evaluated.

#include "ftcad/graph.hpp"
#include "ftcad/pipeline.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ftcad {

inline constexpr double kHoursPerMillion = 1e6;
inline constexpr double kDefaultReferenceHours = 40000.0;
inline constexpr std::size_t kMaxExactComponents = 20;

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
  void add(double x);
  double value() const { return sum_ + carry_; }

private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

double component_reliability(double lambda, double hours);
double unreliability(double reliability);
double mttf(double lambda);

double series_lambda(std::span<const double> lambdas);
double series_reliability(std::span<const double> lambdas, double hours);
/// 1 - prod(1 - r_i); branches assumed independent.
double parallel_reliability(std::span<const double> reliabilities);

/// Serial composition over a pipeline's members. Members without attributes
/// count as lambda 0 and static factor 1.
struct PipelineFigures {
  double total_lambda = 0.0;
  double static_factor = 1.0;
};

PipelineFigures pipeline_figures(const DependencyGraph &graph,
                                 const Pipeline &pipeline);
double pipeline_reliability(const DependencyGraph &graph,
                            const Pipeline &pipeline, double hours);

struct RankedPipeline {
  Pipeline pipeline;
  double total_lambda = 0.0;
  double static_factor = 1.0;
  double r_at_ref = 1.0;
  std::size_t rank = 0;
};

/// Stable sort by reliability at `t_ref`, most reliable first; equal
/// reliabilities keep discovery order.
std::vector<RankedPipeline> rank_pipelines(const DependencyGraph &graph,
                                           const std::vector<Pipeline> &pipelines,
                                           double t_ref = kDefaultReferenceHours);

struct CurveSample {
  double t = 0.0;
  double r = 1.0;
};

struct ReliabilityCurve {
  std::size_t pipeline_index = 0;
  std::vector<CurveSample> samples;
  double t_max = 0.0;
};

/// `n` evenly spaced samples over [0, t_max], both ends included.
ReliabilityCurve sample_curve(const DependencyGraph &graph,
                              const Pipeline &pipeline, double t_max,
                              std::size_t n);

/// Exact system reliability: sums the probability of every up/down state of
/// the pipelines' attribute-bearing members in which all of the pipelines'
/// sinks are operational. Members without attributes never fail. Throws
/// TooLarge above kMaxExactComponents components.
double system_reliability_exact(const DependencyGraph &graph,
                                const std::vector<Pipeline> &pipelines,
                                double hours);

/// Parallel composition of the pipeline reliabilities, treating pipelines as
/// independent even when they share nodes.
double system_reliability_parallel(const DependencyGraph &graph,
                                   const std::vector<Pipeline> &pipelines,
                                   double hours);

struct SystemReliability {
  double exact = 0.0;
  double parallel = 0.0;
  /// parallel - exact; nonzero only when pipelines share components.
  double divergence = 0.0;
  /// No attribute-bearing member appears in two pipelines.
  bool node_disjoint = true;
};

SystemReliability compare_system_reliability(const DependencyGraph &graph,
                                             const std::vector<Pipeline> &pipelines,
                                             double hours);

} // namespace ftcad
