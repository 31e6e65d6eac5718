#include "ftcad/error.hpp"
#include "ftcad/manager.hpp"
#include "support/random_graph.hpp"
#include "support/samples.hpp"

#include <doctest.h>

#include <algorithm>

using namespace ftcad;
using namespace ftcad::sim;

namespace {

ErrorCode code_of(auto fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("expected an ftcad::Error");
  return ErrorCode::Io;
}

std::vector<std::optional<std::size_t>> selections(
    const std::vector<TraceRecord> &trace) {
  std::vector<std::optional<std::size_t>> out;
  for (const auto &r : trace)
    if (r.kind == RecordKind::SelectionChanged)
      out.push_back(r.new_selection);
  return out;
}

ManagerState triple_manager() {
  auto g = testing::load_sample("triple.json");
  return make_manager({9, 10, 12}, pe_directory(g));
}

} // namespace

TEST_CASE("mask matching picks the first contained option") {
  const std::vector<Mask> opts{0x9, 0xA, 0xC};
  CHECK(manager_select(0xF, opts) == 0u);
  CHECK(manager_select(0xE, opts) == 1u);
  CHECK(manager_select(0xC, opts) == 2u);
  CHECK(manager_select(0xD, opts) == 0u);
  CHECK_FALSE(manager_select(0x8, opts));
  CHECK_FALSE(manager_select(0x7, opts));
  CHECK_FALSE(manager_select(0xF, {}));

  std::mt19937 rng(2);
  for (int i = 0; i < 2000; ++i) {
    std::vector<Mask> o(1 + rng() % 6);
    for (auto &m : o)
      m = rng() & 0xFF;
    Mask status = rng() & 0xFF;
    auto got = manager_select(status, o);
    for (std::size_t k = 0; k < o.size(); ++k) {
      bool fits = (status & o[k]) == o[k];
      if (got && k < *got)
        CHECK_FALSE(fits);
      if (got && k == *got)
        CHECK(fits);
      if (!got)
        CHECK_FALSE(fits);
    }
  }
}

TEST_CASE("agents say hello on their phase") {
  PeAgentState a;
  a.key = "p";
  a.pe_id = 0x4;
  a.hello_id = 0x182;
  CHECK(agent_phase(0x4, 10) == 2);
  CHECK(agent_phase(std::uint32_t{1} << 13, 10) == 3);
  CHECK_FALSE(agent_step(a, 0, 10));
  auto f = agent_step(a, 12, 10);
  REQUIRE(f);
  CHECK(f->id == 0x182);
  CHECK(can::frame_mask(*f) == 0x4);
  CHECK(a.last_hello == 12u);
  a.health = Health::FailingGracefully;
  f = agent_step(a, 22, 10);
  REQUIRE(f);
  CHECK(can::frame_mask(*f) == 0);
  a.health = Health::Silent;
  CHECK_FALSE(agent_step(a, 32, 10));
}

TEST_CASE("hello handling") {
  auto m = triple_manager();
  m = apply_hello(m, can::mask_frame(0x180, 0x1, "Door1Drv", 0), 0);
  m = apply_hello(m, can::mask_frame(0x183, 0x8, "Voter", 3), 3);
  CHECK(m.status == 0x9);
  CHECK(m.last_seen[3] == 3u);

  SUBCASE("a zero hello clears the sender's bit at once") {
    m = apply_hello(m, can::mask_frame(0x180, 0, "Door1Drv", 4), 4);
    CHECK(m.status == 0x8);
  }
  SUBCASE("frames for other receivers are ignored") {
    auto before = m.status;
    m = apply_hello(m, can::mask_frame(0x1C0, 0x2, "x", 5), 5);
    CHECK(m.status == before);
  }
  SUBCASE("unknown bits and senders are refused") {
    CHECK(code_of([&] {
            (void)apply_hello(m, can::mask_frame(0x180, 0x10, "x", 5), 5);
          }) == ErrorCode::UnknownPe);
    CHECK(code_of([&] {
            (void)apply_hello(m, can::mask_frame(0x19F, 0, "x", 5), 5);
          }) == ErrorCode::UnknownPe);
  }
  SUBCASE("aging is strict") {
    auto aged = age_status(m, 30);
    CHECK(aged.status == 0x9);
    aged = age_status(m, 31);
    CHECK(aged.status == 0x8);
    aged = age_status(m, 34);
    CHECK(aged.status == 0);
  }
}

TEST_CASE("scenario documents") {
  auto s = parse_scenario(R"({"duration":50,"events":[
      {"tick":5,"node":"a","action":"fail"},
      {"tick":9,"node":"b","action":"fail_silent"},
      {"tick":9,"node":"a","action":"repair"}]})");
  CHECK(s.duration == 50);
  CHECK(s.hello_period == 10);
  CHECK(s.aging_timeout == 30);
  CHECK(s.events.size() == 3);
  CHECK(s.events[1].action == Action::FailSilent);
  CHECK(parse_scenario(serialize_scenario(s)) == s);

  auto custom = parse_scenario(R"({"duration":1,"hello_period":4})");
  CHECK(custom.aging_timeout == 12);

  CHECK(code_of([] { parse_scenario("{"); }) == ErrorCode::Syntax);
  CHECK(code_of([] { parse_scenario("{}"); }) == ErrorCode::Schema);
  CHECK(code_of([] { parse_scenario(R"({"duration":-1})"); }) ==
        ErrorCode::Schema);
  CHECK(code_of([] {
          parse_scenario(R"({"duration":1,"events":[{"tick":1,"node":"a","action":"explode"}]})");
        }) == ErrorCode::Schema);
  CHECK(code_of([] {
          parse_scenario(R"({"duration":1,"events":[
            {"tick":3,"node":"a","action":"fail"},
            {"tick":1,"node":"a","action":"fail"}]})");
        }) == ErrorCode::Schema);
  CHECK(code_of([] { parse_scenario(R"({"duration":1,"drop_rate":2})"); }) ==
        ErrorCode::Schema);
}

TEST_CASE("controller example: PEs 1 and 2 fail") {
  auto g = testing::load_sample("triple.json");
  auto opts = build_options(g);
  REQUIRE(opts.options == std::vector<Mask>{9, 10, 12});
  Scenario s;
  s.duration = 100;
  s.events = {{50, "Door1Drv", Action::Fail}, {50, "Door2Drv", Action::Fail}};
  Simulation run(g, opts, s);
  for (int i = 0; i < 50; ++i)
    run.step();
  CHECK(run.manager().status == 0xF);
  CHECK(run.manager().active == 0u);
  run.run();
  CHECK(run.manager().status == 0xC);
  CHECK(run.manager().active == 2u);
  auto sel = selections(run.trace());
  CHECK(sel == std::vector<std::optional<std::size_t>>{0u, 1u, 2u});

  // Every change of choice is broadcast on the manager-to-all identifier.
  std::vector<Mask> broadcast;
  for (const auto &r : run.trace())
    if (r.kind == RecordKind::ConfigBroadcast) {
      CHECK(r.frame->id == can::kManagerToAll);
      broadcast.push_back(r.mask);
    }
  CHECK(broadcast == std::vector<Mask>{9, 10, 12});
}

TEST_CASE("losing every option takes the system down and back") {
  auto g = testing::load_sample("triple.json");
  auto opts = build_options(g);
  Scenario s;
  s.duration = 200;
  s.events = {{40, "Voter", Action::FailSilent}, {120, "Voter", Action::Repair}};
  auto trace = run_simulation(g, opts, s);
  auto count = [&](RecordKind k) {
    return std::count_if(trace.begin(), trace.end(),
                         [&](const auto &r) { return r.kind == k; });
  };
  CHECK(count(RecordKind::SystemDown) == 1);
  CHECK(count(RecordKind::SystemRestored) == 1);
  CHECK(count(RecordKind::HelloMissed) == 1);
  auto missed = std::find_if(trace.begin(), trace.end(), [](const auto &r) {
    return r.kind == RecordKind::HelloMissed;
  });
  CHECK(missed->node == "Voter");
  CHECK(missed->tick <= 40 + s.aging_timeout + s.hello_period);
  auto sel = selections(trace);
  CHECK(sel.back() == 0u);
  CHECK_FALSE(sel[sel.size() - 2]);
}

TEST_CASE("configuration errors") {
  auto g = testing::load_sample("triple.json");
  auto opts = build_options(g);
  Scenario s;
  s.events = {{1, "Door1", Action::Fail}};
  CHECK(code_of([&] { Simulation(g, opts, s); }) == ErrorCode::Config);
  auto bad = opts;
  bad.options.push_back(0x100);
  CHECK(code_of([&] { Simulation(g, bad, Scenario{}); }) == ErrorCode::Config);
  Simulation ok(g, opts, Scenario{});
  CHECK(code_of([&] { ok.inject("nobody", Action::Fail); }) ==
        ErrorCode::Config);
}

TEST_CASE("traces are deterministic, seeds only matter with frame loss") {
  auto g = testing::load_sample("abs.json");
  auto opts = build_options(g);
  auto s = parse_scenario(
      read_text_file(testing::sample_path("abs_fig37_scenario.json")));
  auto a = trace_jsonl(run_simulation(g, opts, s, 1));
  CHECK(a == trace_jsonl(run_simulation(g, opts, s, 2)));
  s.drop_rate = 0.2;
  auto b = trace_jsonl(run_simulation(g, opts, s, 1));
  CHECK(b == trace_jsonl(run_simulation(g, opts, s, 1)));
  CHECK(b != trace_jsonl(run_simulation(g, opts, s, 2)));
  CHECK(b != a);
}

TEST_CASE("fail-silent detection latency on random systems") {
  std::mt19937_64 rng(77);
  testing::GraphShape shape;
  shape.max_sensors = 3;
  shape.max_stages = 3;
  for (int i = 0; i < 100; ++i) {
    auto g = testing::random_graph(rng, shape);
    auto opts = build_options(g);
    auto dir = pe_directory(g);
    Scenario s;
    s.hello_period = 5 + rng() % 10;
    s.aging_timeout = s.hello_period * (2 + rng() % 3);
    Tick fault = 3 * s.aging_timeout + rng() % 50;
    s.duration = fault + 2 * (s.aging_timeout + s.hello_period);
    auto victim = std::next(dir.begin(), static_cast<long>(rng() % dir.size()));
    s.events = {{fault, victim->second, Action::FailSilent}};
    auto trace = run_simulation(g, opts, s, i);
    auto missed = std::find_if(trace.begin(), trace.end(), [&](const auto &r) {
      return r.kind == RecordKind::HelloMissed && r.node == victim->second;
    });
    REQUIRE(missed != trace.end());
    CHECK(missed->tick >= fault);
    CHECK(missed->tick - fault <= s.aging_timeout + s.hello_period);
  }
}

TEST_CASE("JSONL records") {
  TraceRecord r;
  r.tick = 4;
  r.kind = RecordKind::StatusChanged;
  r.old_status = 0xF;
  r.new_status = 0xC;
  CHECK(record_json(r) ==
        R"({"tick":4,"type":"StatusChanged","old":"0xF","new":"0xC"})");
  r.kind = RecordKind::SelectionChanged;
  r.old_selection = 0;
  r.new_selection = std::nullopt;
  r.mask = 0;
  CHECK(record_json(r) ==
        R"({"tick":4,"type":"SelectionChanged","old":0,"new":null,"mask":"0x0"})");
}
