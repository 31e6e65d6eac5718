#include "ftcad/error.hpp"
#include "ftcad/graph.hpp"
#include "support/random_graph.hpp"
#include "support/samples.hpp"

#include <doctest.h>

#include <algorithm>

using namespace ftcad;

namespace {

Node make(std::string key, NodeKind kind) {
  Node n;
  n.key = std::move(key);
  n.kind = kind;
  return n;
}

Link edge(std::string from, std::string to) {
  Link l;
  l.from = std::move(from);
  l.to = std::move(to);
  return l;
}

DependencyGraph chain() {
  DependencyGraph g;
  g.nodes = {make("s", NodeKind::Sensor), make("p", NodeKind::ProcessingElement),
             make("d", NodeKind::DataVariable), make("a", NodeKind::Actuator)};
  g.links = {edge("s", "p"), edge("p", "d"), edge("d", "a")};
  return g;
}

bool has_rule(const ValidationReport &r, const std::string &rule,
              const std::string &key = {}) {
  return std::any_of(r.begin(), r.end(), [&](const Violation &v) {
    return v.rule == rule && (key.empty() || v.key == key);
  });
}

} // namespace

TEST_CASE("a plain chain validates clean") {
  CHECK(validate_graph(chain()).empty());
}

TEST_CASE("structural violations are reported as data") {
  SUBCASE("duplicate key") {
    auto g = chain();
    g.nodes.push_back(make("p", NodeKind::DataVariable));
    CHECK(has_rule(validate_graph(g), "duplicate-key", "p"));
  }
  SUBCASE("dangling link") {
    auto g = chain();
    g.links.push_back(edge("d", "ghost"));
    CHECK(has_rule(validate_graph(g), "dangling-link"));
  }
  SUBCASE("self loop and cycle") {
    auto g = chain();
    g.links.push_back(edge("p", "p"));
    CHECK(has_rule(validate_graph(g), "self-loop"));
    auto h = chain();
    h.links.push_back(edge("d", "p"));
    CHECK(has_rule(validate_graph(h), "cycle"));
  }
  SUBCASE("sensor input and actuator output") {
    auto g = chain();
    g.links.push_back(edge("d", "s"));
    g.links.push_back(edge("a", "p"));
    auto r = validate_graph(g);
    CHECK(has_rule(r, "sensor-input"));
    CHECK(has_rule(r, "actuator-output"));
  }
  SUBCASE("pe ids") {
    auto g = chain();
    g.nodes[1].pe_id = 3;
    CHECK(has_rule(validate_graph(g), "pe-id-not-one-hot", "p"));
    g.nodes[1].pe_id = 4;
    g.nodes[2].pe_id = 8;
    CHECK(has_rule(validate_graph(g), "pe-id-on-non-pe", "d"));
    auto h = chain();
    h.nodes.push_back(make("p2", NodeKind::ProcessingElement));
    h.links.push_back(edge("d", "p2"));
    h.nodes[1].pe_id = 1;
    h.nodes.back().pe_id = 1;
    CHECK(has_rule(validate_graph(h), "pe-id-duplicate", "p2"));
  }
  SUBCASE("attributes") {
    auto g = chain();
    g.nodes[0].attrs = ReliabilityAttrs{-1.0, std::nullopt, 1.0};
    g.nodes[2].attrs = ReliabilityAttrs{1.0, 2.0, 1.0};
    g.nodes[3].attrs = ReliabilityAttrs{1.0, std::nullopt, 1.5};
    auto r = validate_graph(g);
    CHECK(has_rule(r, "attrs-range", "s"));
    CHECK(has_rule(r, "attrs-sw-rate", "d"));
    CHECK(has_rule(r, "attrs-range", "a"));
  }
  SUBCASE("gates") {
    auto g = chain();
    Node gate = make("g", NodeKind::GateOr);
    gate.or_k = 3;
    gate.attrs = ReliabilityAttrs{};
    g.nodes.push_back(gate);
    g.links = {edge("s", "p"), edge("p", "d"), edge("d", "g"), edge("g", "a")};
    auto r = validate_graph(g);
    CHECK(has_rule(r, "gate-or-k", "g"));
    CHECK(has_rule(r, "attrs-on-control-node", "g"));

    auto h = chain();
    h.nodes.push_back(make("x", NodeKind::GateXor));
    h.nodes.push_back(make("a2", NodeKind::Actuator));
    h.links = {edge("s", "p"), edge("p", "d"), edge("d", "x"), edge("x", "a"),
               edge("x", "a2")};
    CHECK(has_rule(validate_graph(h), "gate-xor-fanout", "x"));

    auto k = chain();
    k.nodes.push_back(make("m", NodeKind::GateDemux));
    k.links = {edge("s", "p"), edge("p", "d"), edge("d", "m"), edge("s", "m"),
               edge("m", "a")};
    CHECK(has_rule(validate_graph(k), "gate-demux-fanin", "m"));

    auto q = chain();
    q.nodes.push_back(make("lonely", NodeKind::GateAnd));
    auto rq = validate_graph(q);
    CHECK(has_rule(rq, "gate-no-input", "lonely"));
    CHECK(has_rule(rq, "gate-no-output", "lonely"));
  }
  SUBCASE("no sources or sinks") {
    DependencyGraph g;
    g.nodes = {make("d", NodeKind::DataVariable)};
    CHECK(has_rule(validate_graph(g), "no-source-sink"));
  }
}

TEST_CASE("normalization adds Start and End delimiters") {
  auto g = normalize_graph(chain());
  const Node *start = g.find("Start");
  const Node *end = g.find("End");
  REQUIRE(start);
  REQUIRE(end);
  CHECK(start->kind == NodeKind::Start);
  CHECK(end->kind == NodeKind::End);
  CHECK(g.nodes.size() == 6);
  CHECK(std::count(g.links.begin(), g.links.end(), edge("Start", "s")) == 1);
  CHECK(std::count(g.links.begin(), g.links.end(), edge("a", "End")) == 1);
  CHECK(validate_graph(g).empty());

  SUBCASE("idempotent") { CHECK(normalize_graph(g) == g); }
  SUBCASE("a node keyed Start is not a delimiter") {
    auto h = chain();
    h.nodes[0].key = "Start";
    h.links[0].from = "Start";
    auto n = normalize_graph(h);
    CHECK(n.nodes.size() == 6);
    CHECK(validate_graph(n).empty());
  }
  SUBCASE("comments are left alone") {
    auto h = chain();
    h.nodes.push_back(make("note", NodeKind::Comment));
    auto n = normalize_graph(h);
    CHECK(std::none_of(n.links.begin(), n.links.end(), [](const Link &l) {
      return l.from == "note" || l.to == "note";
    }));
  }
  SUBCASE("invalid graphs are rejected") {
    auto h = chain();
    h.links.push_back(edge("d", "p"));
    CHECK_THROWS_AS(normalize_graph(h), Error);
    try {
      normalize_graph(h);
    } catch (const Error &e) {
      CHECK(e.code() == ErrorCode::InvalidGraph);
    }
  }
}

TEST_CASE("topological order breaks ties by key") {
  DependencyGraph g;
  g.nodes = {make("z", NodeKind::Sensor), make("b", NodeKind::Sensor),
             make("m", NodeKind::ProcessingElement),
             make("a", NodeKind::Actuator)};
  g.links = {edge("z", "m"), edge("b", "m"), edge("m", "a")};
  GraphIndex idx(g);
  std::vector<std::string> keys;
  for (auto i : idx.topo_order())
    keys.push_back(idx.node(i).key);
  CHECK(keys == std::vector<std::string>{"b", "z", "m", "a"});

  g.links.push_back(edge("a", "z"));
  CHECK(GraphIndex(g).topo_order().empty());
}

TEST_CASE("effective failure rate") {
  Node n = make("p", NodeKind::ProcessingElement);
  CHECK_THROWS_AS(effective_lambda(n), Error);
  n.attrs = ReliabilityAttrs{2.5, std::nullopt, 1.0};
  CHECK(effective_lambda(n) == 2.5);
  n.attrs = ReliabilityAttrs{2.5, 0.5, 1.0};
  CHECK(effective_lambda(n) == 3.0);
  n.attrs = ReliabilityAttrs{std::nullopt, std::nullopt, 0.9};
  CHECK(effective_lambda(n) == 0.0);
}

TEST_CASE("one-hot check") {
  CHECK_FALSE(is_one_hot(0));
  for (int b = 0; b < 32; ++b)
    CHECK(is_one_hot(std::uint32_t{1} << b));
  CHECK_FALSE(is_one_hot(3));
  CHECK_FALSE(is_one_hot(0xFFFFFFFFu));
}

TEST_CASE("bundled samples and random graphs validate clean") {
  for (auto name : testing::kSampleGraphs) {
    CAPTURE(name);
    CHECK(validate_graph(testing::load_sample(name)).empty());
  }
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    auto g = testing::random_graph(rng);
    auto r = validate_graph(g);
    CHECK(r.empty());
    auto n = normalize_graph(g);
    CHECK(validate_graph(n).empty());
    CHECK(normalize_graph(n) == n);
  }
}
