#include "ftcad/manager.hpp"

#include "ftcad/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstdio>

namespace ftcad::sim {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Health health) {
  switch (health) {
  case Health::Healthy: return "healthy";
  case Health::FailingGracefully: return "failing";
  case Health::Silent: return "silent";
  }
  return "?";
}

std::string_view to_string(Action action) {
  switch (action) {
  case Action::Fail: return "fail";
  case Action::FailSilent: return "fail_silent";
  case Action::Repair: return "repair";
  }
  return "?";
}

Action parse_action(std::string_view text) {
  if (text == "fail")
    return Action::Fail;
  if (text == "fail_silent")
    return Action::FailSilent;
  if (text == "repair")
    return Action::Repair;
  throw Error(ErrorCode::Schema, "unknown action '" + std::string(text) + "'");
}

std::string_view to_string(RecordKind kind) {
  switch (kind) {
  case RecordKind::HelloSent: return "HelloSent";
  case RecordKind::HelloMissed: return "HelloMissed";
  case RecordKind::StatusChanged: return "StatusChanged";
  case RecordKind::SelectionChanged: return "SelectionChanged";
  case RecordKind::ConfigBroadcast: return "ConfigBroadcast";
  case RecordKind::SystemDown: return "SystemDown";
  case RecordKind::SystemRestored: return "SystemRestored";
  }
  return "?";
}

Tick agent_phase(Mask pe_id, Tick hello_period) {
  return static_cast<Tick>(std::countr_zero(pe_id)) % hello_period;
}

std::optional<can::Frame> agent_step(PeAgentState &agent, Tick now,
                                     Tick hello_period) {
  if (agent.health == Health::Silent || hello_period == 0)
    return std::nullopt;
  if (now % hello_period != agent_phase(agent.pe_id, hello_period))
    return std::nullopt;
  Mask payload = agent.health == Health::Healthy ? agent.pe_id : 0;
  agent.last_hello = now;
  return can::mask_frame(agent.hello_id, payload, agent.key, now);
}

ManagerState make_manager(std::vector<Mask> options,
                          const std::map<Mask, std::string> &pe_directory,
                          Tick hello_period, Tick aging_timeout) {
  ManagerState state;
  state.options = std::move(options);
  state.hello_period = hello_period;
  state.aging_timeout = aging_timeout;
  for (const auto &[id, key] : pe_directory)
    state.hello_ids.emplace(
        static_cast<std::uint16_t>(can::kHardwarePeToManager +
                                   std::countr_zero(id)),
        id);
  return state;
}

std::optional<std::size_t> manager_select(Mask status,
                                          std::span<const Mask> options) {
  for (std::size_t i = 0; i < options.size(); ++i)
    if ((status & options[i]) == options[i])
      return i;
  return std::nullopt;
}

namespace {

bool to_manager(std::uint16_t id) {
  const auto &range = can::classify_address(id);
  return range.description.ends_with("to Manager");
}

} // namespace

ManagerState apply_hello(ManagerState state, const can::Frame &frame,
                         Tick now) {
  if (!to_manager(frame.id))
    return state;
  Mask known = 0;
  for (const auto &[id, bit] : state.hello_ids)
    known |= bit;
  Mask payload = can::frame_mask(frame);
  if (payload == 0) {
    auto it = state.hello_ids.find(frame.id);
    if (it == state.hello_ids.end())
      throw Error(ErrorCode::UnknownPe,
                  "zero hello from unknown identifier " +
                      std::to_string(frame.id),
                  frame.sender);
    state.status &= ~it->second;
    return state;
  }
  if (payload & ~known)
    throw Error(ErrorCode::UnknownPe,
                "hello carries unknown bits " + hex_mask(payload & ~known),
                frame.sender);
  state.status |= payload;
  for (Mask rest = payload; rest; rest &= rest - 1)
    state.last_seen[static_cast<std::size_t>(std::countr_zero(rest))] = now;
  return state;
}

ManagerState age_status(ManagerState state, Tick now) {
  for (Mask rest = state.status; rest; rest &= rest - 1) {
    auto bit = static_cast<std::size_t>(std::countr_zero(rest));
    const auto &seen = state.last_seen[bit];
    if (seen && now > *seen && now - *seen > state.aging_timeout)
      state.status &= ~(Mask{1} << bit);
  }
  return state;
}

Scenario parse_scenario(std::string_view text) {
  ojson doc;
  try {
    doc = ojson::parse(text.begin(), text.end());
  } catch (const ojson::parse_error &e) {
    throw Error(ErrorCode::Syntax,
                "malformed scenario at byte " + std::to_string(e.byte), {},
                e.byte);
  }
  if (!doc.is_object())
    throw Error(ErrorCode::Schema, "scenario must be a JSON object");
  auto count = [&](const char *field, Tick fallback) -> Tick {
    auto it = doc.find(field);
    if (it == doc.end())
      return fallback;
    if (!it->is_number_unsigned())
      throw Error(ErrorCode::Schema,
                  std::string("'") + field + "' must be a non-negative integer",
                  field);
    return it->get<Tick>();
  };
  if (!doc.contains("duration"))
    throw Error(ErrorCode::Schema, "scenario lacks 'duration'", "duration");
  Scenario s;
  s.duration = count("duration", 0);
  s.hello_period = count("hello_period", 10);
  s.aging_timeout = count("aging_timeout", 3 * s.hello_period);
  if (auto it = doc.find("tick_hours"); it != doc.end()) {
    if (!it->is_number() || it->get<double>() <= 0.0)
      throw Error(ErrorCode::Schema, "'tick_hours' must be positive",
                  "tick_hours");
    s.tick_hours = it->get<double>();
  }
  if (auto it = doc.find("drop_rate"); it != doc.end()) {
    if (!it->is_number() || it->get<double>() < 0.0 || it->get<double>() > 1.0)
      throw Error(ErrorCode::Schema, "'drop_rate' must lie in [0,1]",
                  "drop_rate");
    s.drop_rate = it->get<double>();
  }
  if (auto it = doc.find("events"); it != doc.end()) {
    if (!it->is_array())
      throw Error(ErrorCode::Schema, "'events' must be an array", "events");
    for (const auto &e : *it) {
      if (!e.is_object() || !e.contains("tick") || !e.contains("node") ||
          !e.contains("action") || !e["tick"].is_number_unsigned() ||
          !e["node"].is_string() || !e["action"].is_string())
        throw Error(ErrorCode::Schema,
                    "event needs integer 'tick', string 'node' and 'action'",
                    "events");
      s.events.push_back({e["tick"].get<Tick>(), e["node"].get<std::string>(),
                          parse_action(e["action"].get<std::string>())});
    }
  }
  if (!std::is_sorted(s.events.begin(), s.events.end(),
                      [](const auto &a, const auto &b) { return a.tick < b.tick; }))
    throw Error(ErrorCode::Schema, "events must be sorted by tick", "events");
  return s;
}

std::string serialize_scenario(const Scenario &s) {
  ojson doc = ojson::object();
  doc["duration"] = s.duration;
  doc["tick_hours"] = s.tick_hours;
  doc["hello_period"] = s.hello_period;
  doc["aging_timeout"] = s.aging_timeout;
  if (s.drop_rate > 0.0)
    doc["drop_rate"] = s.drop_rate;
  doc["events"] = ojson::array();
  for (const auto &e : s.events)
    doc["events"].push_back(
        {{"tick", e.tick}, {"node", e.node}, {"action", to_string(e.action)}});
  return doc.dump(2) + "\n";
}

namespace {

std::string hex_id(std::uint16_t id) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "0x%03X", id);
  return buf;
}

std::string payload_hex(const can::Frame &f) {
  std::string out;
  char buf[4];
  for (auto b : f.data()) {
    std::snprintf(buf, sizeof buf, "%02X", b);
    out += buf;
  }
  return out;
}

ojson selection_json(const std::optional<std::size_t> &s) {
  return s ? ojson(*s) : ojson(nullptr);
}

} // namespace

std::string record_json(const TraceRecord &r) {
  ojson j = ojson::object();
  j["tick"] = r.tick;
  j["type"] = to_string(r.kind);
  switch (r.kind) {
  case RecordKind::HelloSent:
    j["node"] = r.node;
    if (r.frame) {
      j["id"] = hex_id(r.frame->id);
      j["payload"] = payload_hex(*r.frame);
    }
    break;
  case RecordKind::HelloMissed:
    j["node"] = r.node;
    j["mask"] = hex_mask(r.mask);
    break;
  case RecordKind::StatusChanged:
    j["old"] = hex_mask(r.old_status);
    j["new"] = hex_mask(r.new_status);
    break;
  case RecordKind::SelectionChanged:
    j["old"] = selection_json(r.old_selection);
    j["new"] = selection_json(r.new_selection);
    j["mask"] = hex_mask(r.mask);
    break;
  case RecordKind::ConfigBroadcast:
    if (r.frame) {
      j["id"] = hex_id(r.frame->id);
      j["sender"] = r.frame->sender;
      j["payload"] = payload_hex(*r.frame);
    }
    j["mask"] = hex_mask(r.mask);
    break;
  case RecordKind::SystemDown:
  case RecordKind::SystemRestored:
    j["status"] = hex_mask(r.new_status);
    break;
  }
  return j.dump();
}

std::string trace_jsonl(std::span<const TraceRecord> records) {
  std::string out;
  for (const auto &r : records) {
    out += record_json(r);
    out += '\n';
  }
  return out;
}

Simulation::Simulation(const DependencyGraph &graph,
                       const ReliabilityOptions &options, Scenario scenario,
                       std::uint64_t seed)
    : scenario_(std::move(scenario)), directory_(ftcad::pe_directory(graph)),
      rng_(seed) {
  if (scenario_.hello_period == 0)
    throw Error(ErrorCode::Config, "hello period must be positive",
                "hello_period");
  Mask known = 0;
  for (const auto &[id, key] : directory_)
    known |= id;
  for (auto m : options.options)
    if (m & ~known)
      throw Error(ErrorCode::Config,
                  "option " + hex_mask(m) + " references PEs absent from the "
                                            "graph");
  for (const auto &e : scenario_.events) {
    bool found = std::any_of(directory_.begin(), directory_.end(),
                             [&](const auto &d) { return d.second == e.node; });
    if (!found)
      throw Error(ErrorCode::Config,
                  "scenario event names '" + e.node +
                      "', which is not an identified processing element",
                  e.node);
  }
  for (const auto &[id, key] : directory_) {
    PeAgentState agent;
    agent.key = key;
    agent.pe_id = id;
    agent.hello_id = static_cast<std::uint16_t>(can::kHardwarePeToManager +
                                                std::countr_zero(id));
    agents_.push_back(std::move(agent));
  }
  manager_ = make_manager(options.options, directory_, scenario_.hello_period,
                          scenario_.aging_timeout);
}

void Simulation::inject(const std::string &node, Action action) {
  bool found = std::any_of(agents_.begin(), agents_.end(),
                           [&](const auto &a) { return a.key == node; });
  if (!found)
    throw Error(ErrorCode::Config,
                "'" + node + "' is not an identified processing element", node);
  injected_.push_back({now_, node, action});
}

void Simulation::apply_action(const std::string &node, Action action) {
  for (auto &agent : agents_) {
    if (agent.key != node)
      continue;
    switch (action) {
    case Action::Fail: agent.health = Health::FailingGracefully; break;
    case Action::FailSilent: agent.health = Health::Silent; break;
    case Action::Repair: agent.health = Health::Healthy; break;
    }
  }
}

bool Simulation::dropped() {
  if (scenario_.drop_rate <= 0.0)
    return false;
  double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  return u < scenario_.drop_rate;
}

void Simulation::step() {
  const Tick now = now_;
  const Mask status_before = manager_.status;

  while (next_event_ < scenario_.events.size() &&
         scenario_.events[next_event_].tick <= now) {
    const auto &e = scenario_.events[next_event_++];
    apply_action(e.node, e.action);
  }
  for (const auto &e : injected_)
    apply_action(e.node, e.action);
  injected_.clear();

  for (auto &agent : agents_) {
    auto frame = agent_step(agent, now, scenario_.hello_period);
    if (!frame)
      continue;
    TraceRecord r;
    r.tick = now;
    r.kind = RecordKind::HelloSent;
    r.node = agent.key;
    r.frame = *frame;
    trace_.push_back(std::move(r));
    if (!dropped())
      bus_.submit(std::move(*frame));
  }

  if (auto delivered = bus_.step(now)) {
    if (delivered->id == can::kManagerToAll) {
      TraceRecord r;
      r.tick = now;
      r.kind = RecordKind::ConfigBroadcast;
      r.node = delivered->sender;
      r.mask = can::frame_mask(*delivered);
      r.frame = *delivered;
      trace_.push_back(std::move(r));
    } else {
      manager_ = apply_hello(std::move(manager_), *delivered, now);
    }
  }

  const Mask before_aging = manager_.status;
  manager_ = age_status(std::move(manager_), now);
  for (Mask lost = before_aging & ~manager_.status; lost; lost &= lost - 1) {
    Mask bit = lost & (~lost + 1);
    TraceRecord r;
    r.tick = now;
    r.kind = RecordKind::HelloMissed;
    r.node = directory_.count(bit) ? directory_.at(bit) : std::string();
    r.mask = bit;
    trace_.push_back(std::move(r));
  }

  if (manager_.status != status_before) {
    TraceRecord sc;
    sc.tick = now;
    sc.kind = RecordKind::StatusChanged;
    sc.old_status = status_before;
    sc.new_status = manager_.status;
    trace_.push_back(sc);

    auto selection = manager_select(manager_.status, manager_.options);
    if (selection != manager_.active) {
      Mask mask = selection ? manager_.options[*selection] : 0;
      TraceRecord sel;
      sel.tick = now;
      sel.kind = RecordKind::SelectionChanged;
      sel.old_selection = manager_.active;
      sel.new_selection = selection;
      sel.mask = mask;
      trace_.push_back(sel);
      if (!selection && manager_.active) {
        down_ = true;
        trace_.push_back({now, RecordKind::SystemDown, {}, status_before,
                          manager_.status, {}, {}, 0, {}});
      } else if (selection && down_) {
        down_ = false;
        trace_.push_back({now, RecordKind::SystemRestored, {}, status_before,
                          manager_.status, {}, {}, mask, {}});
      }
      manager_.active = selection;
      bus_.submit(can::mask_frame(can::kManagerToAll, mask, "manager", now));
    }
  }
  ++now_;
}

std::vector<TraceRecord> run_simulation(const DependencyGraph &graph,
                                        const ReliabilityOptions &options,
                                        const Scenario &scenario,
                                        std::uint64_t seed) {
  Simulation sim(graph, options, scenario, seed);
  sim.run();
  return sim.trace();
}

} // namespace ftcad::sim
