#pragma once

// Slotted CAN 2.0A bus model: 11-bit identifiers, lowest identifier wins
// arbitration, every endpoint sees the delivered frame.

#include "ftcad/error.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ftcad::can {

inline constexpr std::uint16_t kMaxId = 2047;
inline constexpr std::uint8_t kMaxDlc = 8;

/// Address sub-range bases used by the simulator.
inline constexpr std::uint16_t kManagerToAll = 0x40;
inline constexpr std::uint16_t kHardwarePeToManager = 0x180;

struct Frame {
  std::uint16_t id = 0;
  std::uint8_t dlc = 0;
  std::array<std::uint8_t, 8> payload{};
  std::string sender;
  std::uint64_t tick = 0;

  /// Throws OutOfRange for id > 2047 or more than 8 payload bytes.
  static Frame make(std::uint16_t id, std::span<const std::uint8_t> data,
                    std::string sender = {}, std::uint64_t tick = 0);

  std::span<const std::uint8_t> data() const { return {payload.data(), dlc}; }

  friend bool operator==(const Frame &, const Frame &) = default;
};

/// 32-bit masks travel big-endian in four bytes.
Frame mask_frame(std::uint16_t id, std::uint32_t mask, std::string sender,
                 std::uint64_t tick);
std::uint32_t frame_mask(const Frame &frame);

enum class Category {
  Emergency,
  Manager,
  SoftwarePE,
  HardwarePE,
  Actuator,
  Block1,
  Block2,
  Unallocated,
};

std::string_view to_string(Category category);

struct AddressRange {
  Category category;
  std::uint16_t first;
  std::uint16_t last;
  std::string_view description;
};

/// The address-space map, ascending and contiguous over 0..2047.
std::span<const AddressRange> address_map();

/// Row containing `id`. Throws OutOfRange above 2047.
const AddressRange &classify_address(std::uint32_t id);

struct Mnemonic {
  std::string_view name;
  std::uint16_t id;
};

/// Message identifiers of the anti-lock braking case study.
std::span<const Mnemonic> abs_identifiers();

/// Throws UnknownMnemonic.
std::uint16_t abs_identifier(std::string_view mnemonic);

/// Frame with the lowest id. Throws IdCollision when two contenders share an
/// id, Domain on an empty set.
const Frame &arbitrate(std::span<const Frame> contenders);

/// One frame per tick; losers stay queued in submission order.
class Bus {
public:
  using Listener = std::function<void(const Frame &)>;

  void attach(Listener listener) { listeners_.push_back(std::move(listener)); }
  /// A frame replaces a still-pending frame from the same sender with the
  /// same id (transmit mailbox overwrite).
  void submit(Frame frame);

  /// Arbitrates the pending frames, delivers the winner to every listener and
  /// returns it.
  std::optional<Frame> step(std::uint64_t tick);

  std::size_t pending() const { return pending_.size(); }
  const std::vector<Frame> &log() const { return log_; }

private:
  std::vector<Frame> pending_;
  std::vector<Listener> listeners_;
  std::vector<Frame> log_;
};

/// Frame log as CSV "tick,id_hex,sender,dlc,payload_hex".
std::string frame_log_csv(std::span<const Frame> frames);

} // namespace ftcad::can
