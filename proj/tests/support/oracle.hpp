#pragma once

// Brute-force oracles written independently of the library's traversal code:
// a recursive gate evaluator over the raw graph, exhaustive minimal
// operational subsets, and a 2^n state enumeration for system reliability.

#include "ftcad/graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace ftcad::testing {

/// Nodes with a member kind, document order.
inline std::vector<std::string> member_keys(const DependencyGraph &g) {
  std::vector<std::string> out;
  for (const auto &n : g.nodes)
    if (is_member_kind(n.kind))
      out.push_back(n.key);
  return out;
}

/// Does `sink` receive data when only `alive` members work?
inline bool oracle_operational(const DependencyGraph &g,
                               const std::set<std::string> &alive,
                               const std::string &sink) {
  std::map<std::string, std::vector<std::string>> preds;
  for (const auto &l : g.links) {
    const Node *from = g.find(l.from);
    const Node *to = g.find(l.to);
    if (!from || !to || from->kind == NodeKind::Comment ||
        to->kind == NodeKind::Comment)
      continue;
    preds[l.to].push_back(l.from);
  }
  std::map<std::string, bool> memo;
  std::function<bool(const std::string &)> live = [&](const std::string &key) {
    if (auto it = memo.find(key); it != memo.end())
      return it->second;
    const Node &n = *g.find(key);
    const auto &in = preds[key];
    int up = 0;
    for (const auto &p : in)
      up += live(p) ? 1 : 0;
    int total = static_cast<int>(in.size());
    bool result = false;
    switch (n.kind) {
    case NodeKind::Start: result = true; break;
    case NodeKind::GateAnd:
    case NodeKind::GateDemux: result = total > 0 && up == total; break;
    case NodeKind::GateOr: result = up >= n.or_k; break;
    case NodeKind::GateXor: result = up >= 1; break;
    case NodeKind::End:
    case NodeKind::Comment: result = false; break;
    default: result = alive.count(key) && up == total; break;
    }
    memo[key] = result;
    return result;
  };
  return live(sink);
}

/// Every inclusion-minimal member subset that keeps `sink` operational,
/// sorted member lists, sorted lexicographically.
inline std::vector<std::vector<std::string>>
oracle_minimal_subsets(const DependencyGraph &g, const std::string &sink) {
  auto members = member_keys(g);
  const std::size_t n = members.size();
  std::vector<std::uint32_t> working;
  for (std::uint32_t s = 0; s < (std::uint32_t{1} << n); ++s) {
    std::set<std::string> alive;
    for (std::size_t i = 0; i < n; ++i)
      if (s >> i & 1u)
        alive.insert(members[i]);
    if (oracle_operational(g, alive, sink))
      working.push_back(s);
  }
  std::vector<std::vector<std::string>> out;
  for (auto s : working) {
    bool minimal = std::none_of(working.begin(), working.end(), [&](auto t) {
      return t != s && (t & s) == t;
    });
    if (!minimal)
      continue;
    std::vector<std::string> keys;
    for (std::size_t i = 0; i < n; ++i)
      if (s >> i & 1u)
        keys.push_back(members[i]);
    std::sort(keys.begin(), keys.end());
    out.push_back(std::move(keys));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Component reliability written out from the definitions, in long double.
inline long double oracle_component(const Node &n, double hours) {
  long double lambda = 0.0L;
  if (n.attrs->lambda_hw)
    lambda += *n.attrs->lambda_hw;
  if (n.attrs->lambda_sw)
    lambda += *n.attrs->lambda_sw;
  return static_cast<long double>(n.attrs->static_rel) *
         std::exp(-lambda * static_cast<long double>(hours) / 1e6L);
}

/// Probability that every sink in `sinks` is operational when the members in
/// `universe` fail independently; everything outside `universe` is down and
/// members without attributes never fail.
inline long double oracle_system_reliability(const DependencyGraph &g,
                                             const std::set<std::string> &universe,
                                             const std::set<std::string> &sinks,
                                             double hours) {
  std::vector<const Node *> random_nodes;
  std::set<std::string> fixed_up;
  for (const auto &key : universe) {
    const Node *n = g.find(key);
    if (n->attrs)
      random_nodes.push_back(n);
    else
      fixed_up.insert(key);
  }
  const std::size_t k = random_nodes.size();
  long double total = 0.0L;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << k); ++s) {
    std::set<std::string> alive = fixed_up;
    long double p = 1.0L;
    for (std::size_t i = 0; i < k; ++i) {
      long double r = oracle_component(*random_nodes[i], hours);
      if (s >> i & 1u) {
        alive.insert(random_nodes[i]->key);
        p *= r;
      } else {
        p *= 1.0L - r;
      }
    }
    bool ok = std::all_of(sinks.begin(), sinks.end(), [&](const auto &sink) {
      return oracle_operational(g, alive, sink);
    });
    if (ok)
      total += p;
  }
  return total;
}

inline bool close_rel(double got, long double want, double tol) {
  long double scale = std::max(std::fabs(want), 1e-300L);
  return std::fabs(static_cast<long double>(got) - want) / scale <= tol;
}

} // namespace ftcad::testing
