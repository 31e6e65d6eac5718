#include "ftcad/reliability.hpp"

#include "ftcad/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ftcad {

void CompensatedSum::add(double x) {
  double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    carry_ += (sum_ - t) + x;
  else
    carry_ += (x - t) + sum_;
  sum_ = t;
}

namespace {

void require_rate(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw Error(ErrorCode::Domain, "failure rate must be finite and >= 0");
}

void require_time(double hours) {
  if (!(hours >= 0.0) || !std::isfinite(hours))
    throw Error(ErrorCode::Domain, "time must be finite and >= 0");
}

void require_probability(double r) {
  if (!(r >= 0.0 && r <= 1.0))
    throw Error(ErrorCode::Domain, "reliability must lie in [0,1]");
}

} // namespace

double component_reliability(double lambda, double hours) {
  require_rate(lambda);
  require_time(hours);
  return std::exp(-(lambda / kHoursPerMillion) * hours);
}

double unreliability(double reliability) {
  require_probability(reliability);
  return 1.0 - reliability;
}

double mttf(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw Error(ErrorCode::Domain, "MTTF needs a positive failure rate");
  return kHoursPerMillion / lambda;
}

double series_lambda(std::span<const double> lambdas) {
  CompensatedSum sum;
  for (double l : lambdas) {
    require_rate(l);
    sum.add(l);
  }
  return sum.value();
}

double series_reliability(std::span<const double> lambdas, double hours) {
  require_time(hours);
  return std::exp(-(series_lambda(lambdas) / kHoursPerMillion) * hours);
}

double parallel_reliability(std::span<const double> reliabilities) {
  if (reliabilities.empty())
    throw Error(ErrorCode::Domain, "parallel composition needs a branch");
  double q = 1.0;
  for (double r : reliabilities)
    q *= unreliability(r);
  return 1.0 - q;
}

PipelineFigures pipeline_figures(const DependencyGraph &graph,
                                 const Pipeline &pipeline) {
  std::vector<double> lambdas;
  double factor = 1.0;
  for (const auto &key : pipeline.sequence) {
    const Node *node = graph.find(key);
    if (!node || !node->attrs)
      continue;
    lambdas.push_back(effective_lambda(*node));
    factor *= node->attrs->static_rel;
  }
  return {series_lambda(lambdas), factor};
}

double pipeline_reliability(const DependencyGraph &graph,
                            const Pipeline &pipeline, double hours) {
  require_time(hours);
  auto f = pipeline_figures(graph, pipeline);
  return f.static_factor *
         std::exp(-(f.total_lambda / kHoursPerMillion) * hours);
}

std::vector<RankedPipeline> rank_pipelines(const DependencyGraph &graph,
                                           const std::vector<Pipeline> &pipelines,
                                           double t_ref) {
  if (!(t_ref > 0.0) || !std::isfinite(t_ref))
    throw Error(ErrorCode::Domain, "reference time must be positive");
  struct Keyed {
    RankedPipeline ranked;
    double log_r;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(pipelines.size());
  for (const auto &p : pipelines) {
    auto f = pipeline_figures(graph, p);
    // Ordering on log-reliability keeps the permutation independent of t_ref
    // for pure failure-rate graphs: the key is a monotone image of the sum.
    double exponent = -(f.total_lambda / kHoursPerMillion) * t_ref;
    double log_r = std::log(f.static_factor) + exponent;
    RankedPipeline r{p, f.total_lambda, f.static_factor,
                     f.static_factor * std::exp(exponent), 0};
    keyed.push_back({std::move(r), log_r});
  }
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const Keyed &a, const Keyed &b) {
                     return a.log_r > b.log_r;
                   });
  std::vector<RankedPipeline> out;
  out.reserve(keyed.size());
  for (auto &k : keyed) {
    k.ranked.rank = out.size() + 1;
    out.push_back(std::move(k.ranked));
  }
  return out;
}

ReliabilityCurve sample_curve(const DependencyGraph &graph,
                              const Pipeline &pipeline, double t_max,
                              std::size_t n) {
  if (!(t_max > 0.0) || !std::isfinite(t_max))
    throw Error(ErrorCode::Domain, "curve window must be positive");
  if (n < 2)
    throw Error(ErrorCode::Domain, "a curve needs at least two samples");
  auto f = pipeline_figures(graph, pipeline);
  ReliabilityCurve curve{pipeline.index, {}, t_max};
  curve.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = (i + 1 == n) ? t_max
                            : t_max * static_cast<double>(i) /
                                  static_cast<double>(n - 1);
    double r = f.static_factor *
               std::exp(-(f.total_lambda / kHoursPerMillion) * t);
    curve.samples.push_back({t, r});
  }
  return curve;
}

namespace {

double node_reliability(const Node &node, double hours) {
  if (!node.attrs)
    return 1.0;
  return node.attrs->static_rel *
         std::exp(-(effective_lambda(node) / kHoursPerMillion) * hours);
}

} // namespace

double system_reliability_exact(const DependencyGraph &graph,
                                const std::vector<Pipeline> &pipelines,
                                double hours) {
  require_time(hours);
  if (pipelines.empty())
    return 0.0;
  const DependencyGraph normalized = normalize_graph(graph);
  StructureFunction sf(normalized);
  const auto &idx = sf.index();

  // Nodes outside the given pipelines count as down, so the result describes
  // the system restricted to those pipelines.
  std::vector<char> alive(idx.size(), 0);
  std::set<std::size_t> component_set;
  std::set<std::size_t> sink_set;
  for (const auto &p : pipelines) {
    for (const auto &key : p.members) {
      auto i = idx.index_of(key);
      if (!i)
        continue;
      if (idx.node(*i).attrs)
        component_set.insert(*i);
      else
        alive[*i] = 1;
    }
    if (auto s = idx.index_of(p.sink))
      sink_set.insert(*s);
  }
  std::vector<std::size_t> components(component_set.begin(),
                                      component_set.end());
  if (components.size() > kMaxExactComponents)
    throw Error(ErrorCode::TooLarge,
                std::to_string(components.size()) +
                    " components exceed the exact-enumeration limit of " +
                    std::to_string(kMaxExactComponents));

  std::vector<double> up(components.size());
  for (std::size_t c = 0; c < components.size(); ++c)
    up[c] = node_reliability(idx.node(components[c]), hours);

  CompensatedSum total;
  const std::uint64_t states = std::uint64_t{1} << components.size();
  for (std::uint64_t state = 0; state < states; ++state) {
    for (std::size_t c = 0; c < components.size(); ++c)
      alive[components[c]] = static_cast<char>((state >> c) & 1u);
    bool ok = std::all_of(sink_set.begin(), sink_set.end(), [&](auto sink) {
      return sf.operational(alive, sink);
    });
    if (!ok)
      continue;
    double p = 1.0;
    for (std::size_t c = 0; c < components.size(); ++c)
      p *= ((state >> c) & 1u) ? up[c] : 1.0 - up[c];
    total.add(p);
  }
  return total.value();
}

double system_reliability_parallel(const DependencyGraph &graph,
                                   const std::vector<Pipeline> &pipelines,
                                   double hours) {
  std::vector<double> rs;
  rs.reserve(pipelines.size());
  for (const auto &p : pipelines)
    rs.push_back(pipeline_reliability(graph, p, hours));
  return parallel_reliability(rs);
}

SystemReliability compare_system_reliability(const DependencyGraph &graph,
                                             const std::vector<Pipeline> &pipelines,
                                             double hours) {
  SystemReliability out;
  out.exact = system_reliability_exact(graph, pipelines, hours);
  out.parallel = system_reliability_parallel(graph, pipelines, hours);
  out.divergence = out.parallel - out.exact;
  std::set<std::string> seen;
  for (const auto &p : pipelines)
    for (const auto &m : p.members) {
      const Node *node = graph.find(m);
      if (node && node->attrs && !seen.insert(m).second)
        out.node_disjoint = false;
    }
  return out;
}

} // namespace ftcad
