#pragma once

// Runtime side: PE agents send periodic hello frames, the system manager keeps
// an aged status register of live PEs, matches it against the exported
// options and broadcasts a new configuration whenever its choice changes.

#include "ftcad/can.hpp"
#include "ftcad/graph.hpp"
#include "ftcad/strategy.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ftcad::sim {

using Tick = std::uint64_t;

enum class Health { Healthy, FailingGracefully, Silent };
enum class Action { Fail, FailSilent, Repair };

std::string_view to_string(Health health);
std::string_view to_string(Action action);
/// "fail", "fail_silent" or "repair"; throws SchemaError otherwise.
Action parse_action(std::string_view text);

struct PeAgentState {
  std::string key;
  Mask pe_id = 0;
  Health health = Health::Healthy;
  std::optional<Tick> last_hello;
  std::uint16_t hello_id = can::kHardwarePeToManager;
};

/// Hello phase: bit index modulo the hello period.
Tick agent_phase(Mask pe_id, Tick hello_period);

/// Emits the agent's hello when `now` hits its phase. Healthy agents send
/// their ID, gracefully failing agents send zeros, silent agents nothing.
std::optional<can::Frame> agent_step(PeAgentState &agent, Tick now,
                                     Tick hello_period);

struct ManagerState {
  Mask status = 0;
  std::vector<Mask> options;
  std::optional<std::size_t> active;
  Tick hello_period = 10;
  Tick aging_timeout = 30;
  /// Last tick a nonzero hello refreshed each bit.
  std::array<std::optional<Tick>, 32> last_seen{};
  /// Hello identifier of each known PE.
  std::map<std::uint16_t, Mask> hello_ids;
};

/// Manager for `options` whose PEs say hello on 0x180 + bit index.
ManagerState make_manager(std::vector<Mask> options,
                          const std::map<Mask, std::string> &pe_directory,
                          Tick hello_period = 10, Tick aging_timeout = 30);

/// Smallest index whose mask is fully contained in `status`.
std::optional<std::size_t> manager_select(Mask status,
                                          std::span<const Mask> options);

/// Frames outside the "... to Manager" sub-ranges are ignored. Throws
/// UnknownPe for payload bits or zero-hello senders the manager does not know.
[[nodiscard]] ManagerState apply_hello(ManagerState state,
                                       const can::Frame &frame, Tick now);

/// Clears every bit whose last hello is more than the aging timeout old.
[[nodiscard]] ManagerState age_status(ManagerState state, Tick now);

struct ScenarioEvent {
  Tick tick = 0;
  std::string node;
  Action action = Action::Fail;

  friend bool operator==(const ScenarioEvent &, const ScenarioEvent &) = default;
};

struct Scenario {
  Tick duration = 100;
  /// Hours per tick; bookkeeping only.
  double tick_hours = 1.0;
  Tick hello_period = 10;
  Tick aging_timeout = 30;
  /// Probability that a hello frame is lost before reaching the bus.
  double drop_rate = 0.0;
  std::vector<ScenarioEvent> events;

  friend bool operator==(const Scenario &, const Scenario &) = default;
};

Scenario parse_scenario(std::string_view text);
std::string serialize_scenario(const Scenario &scenario);

enum class RecordKind {
  HelloSent,
  HelloMissed,
  StatusChanged,
  SelectionChanged,
  ConfigBroadcast,
  SystemDown,
  SystemRestored,
};

std::string_view to_string(RecordKind kind);

struct TraceRecord {
  Tick tick = 0;
  RecordKind kind = RecordKind::HelloSent;
  std::string node;
  Mask old_status = 0;
  Mask new_status = 0;
  std::optional<std::size_t> old_selection;
  std::optional<std::size_t> new_selection;
  Mask mask = 0;
  std::optional<can::Frame> frame;
};

/// One JSON object per line.
std::string trace_jsonl(std::span<const TraceRecord> records);
std::string record_json(const TraceRecord &record);

/// Step-wise simulation of agents, bus and manager. Each tick: scenario and
/// injected events, agent hellos, one bus delivery, aging, then selection.
class Simulation {
public:
  /// Throws ConfigError when options reference unknown PE bits or events name
  /// nodes that are not identified PEs.
  Simulation(const DependencyGraph &graph, const ReliabilityOptions &options,
             Scenario scenario, std::uint64_t seed = 0);

  /// Queues a health change applied at the start of the next tick.
  void inject(const std::string &node, Action action);

  void step();
  void run() {
    while (now_ < scenario_.duration)
      step();
  }

  Tick now() const { return now_; }
  bool finished() const { return now_ >= scenario_.duration; }
  const Scenario &scenario() const { return scenario_; }
  const ManagerState &manager() const { return manager_; }
  const std::vector<PeAgentState> &agents() const { return agents_; }
  const std::vector<TraceRecord> &trace() const { return trace_; }
  const can::Bus &bus() const { return bus_; }
  const std::map<Mask, std::string> &pe_directory() const { return directory_; }

private:
  void apply_action(const std::string &node, Action action);
  bool dropped();

  Scenario scenario_;
  std::map<Mask, std::string> directory_;
  std::vector<PeAgentState> agents_;
  ManagerState manager_;
  can::Bus bus_;
  std::vector<TraceRecord> trace_;
  std::vector<ScenarioEvent> injected_;
  std::size_t next_event_ = 0;
  Tick now_ = 0;
  bool down_ = false;
  std::mt19937_64 rng_;
};

std::vector<TraceRecord> run_simulation(const DependencyGraph &graph,
                                        const ReliabilityOptions &options,
                                        const Scenario &scenario,
                                        std::uint64_t seed = 0);

} // namespace ftcad::sim
