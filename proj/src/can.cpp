#include "ftcad/can.hpp"

#include <algorithm>
#include <cstdio>

namespace ftcad::can {

Frame Frame::make(std::uint16_t id, std::span<const std::uint8_t> data,
                  std::string sender, std::uint64_t tick) {
  if (id > kMaxId)
    throw Error(ErrorCode::OutOfRange,
                "identifier " + std::to_string(id) + " exceeds 11 bits");
  if (data.size() > kMaxDlc)
    throw Error(ErrorCode::OutOfRange, "payload exceeds 8 bytes");
  Frame f;
  f.id = id;
  f.dlc = static_cast<std::uint8_t>(data.size());
  std::copy(data.begin(), data.end(), f.payload.begin());
  f.sender = std::move(sender);
  f.tick = tick;
  return f;
}

Frame mask_frame(std::uint16_t id, std::uint32_t mask, std::string sender,
                 std::uint64_t tick) {
  const std::array<std::uint8_t, 4> bytes{
      static_cast<std::uint8_t>(mask >> 24), static_cast<std::uint8_t>(mask >> 16),
      static_cast<std::uint8_t>(mask >> 8), static_cast<std::uint8_t>(mask)};
  return Frame::make(id, bytes, std::move(sender), tick);
}

std::uint32_t frame_mask(const Frame &frame) {
  std::uint32_t mask = 0;
  for (auto b : frame.data())
    mask = (mask << 8) | b;
  return mask;
}

std::string_view to_string(Category category) {
  switch (category) {
  case Category::Emergency: return "Emergency";
  case Category::Manager: return "Manager";
  case Category::SoftwarePE: return "Software PE";
  case Category::HardwarePE: return "HW PE";
  case Category::Actuator: return "Actuator";
  case Category::Block1: return "Block1";
  case Category::Block2: return "Block2";
  case Category::Unallocated: return "Unallocated";
  }
  return "?";
}

namespace {

constexpr std::array<AddressRange, 29> kAddressMap{{
    {Category::Emergency, 0, 31, ""},
    {Category::Emergency, 32, 63, ""},
    {Category::Emergency, 64, 95, "MANAGER TO ALL"},
    {Category::Emergency, 96, 127, ""},
    {Category::Manager, 128, 159, "Hardware PE to Manager"},
    {Category::Manager, 160, 191, "Manager PE to Actuators"},
    {Category::Manager, 192, 223, "Manager PE to Software PE"},
    {Category::Manager, 224, 255, "Manager Hardware PE"},
    {Category::SoftwarePE, 256, 287, "SW PE to Manager"},
    {Category::SoftwarePE, 288, 319, "SW PE to Actuators"},
    {Category::SoftwarePE, 320, 351, "SW PE to Software PE"},
    {Category::SoftwarePE, 352, 383, "SW PE to Hardware PE"},
    {Category::HardwarePE, 384, 415, "Hardware PE to Manager"},
    {Category::HardwarePE, 416, 447, "Hardware PE to Actuators"},
    {Category::HardwarePE, 448, 479, "Hardware PE to Software PE"},
    {Category::HardwarePE, 480, 511, "Hardware PE to Hardware PE"},
    {Category::Actuator, 512, 543, "Actuator to Manager"},
    {Category::Actuator, 544, 575, ""},
    {Category::Actuator, 576, 607, ""},
    {Category::Actuator, 608, 639, ""},
    {Category::Block1, 640, 671, ""},
    {Category::Block1, 672, 703, ""},
    {Category::Block1, 704, 735, ""},
    {Category::Block1, 736, 767, ""},
    {Category::Block2, 768, 799, ""},
    {Category::Block2, 800, 831, ""},
    {Category::Block2, 832, 863, ""},
    {Category::Block2, 864, 895, ""},
    {Category::Unallocated, 896, 2047, "Unallocated for system expansion"},
}};

constexpr Mnemonic kAbsIdentifiers[] = {
    {"ManagerToRR_Speed_Est", 0xE0},
    {"ManagerToRL_Speed_Est", 0xE1},
    {"ManagerToR_Speed_Diff_Est", 0xC0},
    {"ManagerToRD_Speed_Est", 0xE2},
    {"ManagerToR_F_Diff_Est", 0xC1},
    {"ManagerToFR_Speed_Est", 0xE3},
    {"ManagerToFL_Speed_Est", 0xE4},
    {"ManagerToF_Speed_Diff_Est", 0xC2},
    {"ManagerToBrake_Padel_Drv", 0xE5},
    {"ManagerToABS_Control_Drv", 0xC3},
    {"ManagerToAccel_Padel_Drv", 0xE6},
    {"ManagerToTCS_Control_Drv", 0xC4},
    {"ManagerToValves", 0xA0},
    {"RR_Speed_EstToManager", 0x180},
    {"RR_Speed_EstToR_Speed_Diff_Est", 0x1C0},
    {"RL_Speed_EstToManager", 0x181},
    {"RL_Speed_EstToR_Speed_Diff_Est", 0x1C1},
    {"R_Speed_Diff_EstToManager", 0x100},
    {"R_Speed_Diff_EstToR_F_Diff_Est", 0x140},
    {"RD_Speed_EstToManager", 0x182},
    {"RD_Speed_EstToR_F_Diff_Est", 0x141},
    {"R_F_Diff_EstToManager", 0x101},
    {"R_F_Diff_EstToABS_Control_Drv", 0x142},
    {"FR_Speed_EstToManager", 0x183},
    {"FR_Speed_EstToF_Speed_Diff_Est", 0x1C2},
    {"FL_Speed_EstToManager", 0x184},
    {"FL_Speed_EstToF_Speed_Diff_Est", 0x1C3},
    {"F_Speed_Diff_EstToManager", 0x102},
    {"F_Speed_Diff_EstToABS_Control_Drv", 0x143},
    {"F_Speed_Diff_EstToTCS_Control_Drv", 0x144},
    {"Brake_Padel_DrvToManager", 0x185},
    {"Brake_Padel_DrvToABS_Control_Drv", 0xFA},
    {"ABS_Control_DrvToManager", 0x103},
    {"ABS_Control_DrvToActuator", 0x120},
    {"Accel_Padel_DrvToManager", 0x186},
    {"Accel_Padel_DrvToABS_Control_Drv", 0x1C4},
    {"Accel_Padel_DrvToTCS_Control_Drv", 0x122},
    {"TCS_Control_DrvToManager", 0x104},
    {"TCS_Control_DrvToValve", 0x121},
    {"ValvesToManager", 0x200},
    {"R_Speed_Diff_EstToABS_Control_Drv", 0x145},
    {"F_Speed_Diff_EstToR_F_Diff_Est", 0x146},
    {"TCS_Control_DrvToABS_Control_Drv", 0x147},
};

} // namespace

std::span<const AddressRange> address_map() { return kAddressMap; }

const AddressRange &classify_address(std::uint32_t id) {
  if (id > kMaxId)
    throw Error(ErrorCode::OutOfRange,
                "identifier " + std::to_string(id) + " exceeds 11 bits");
  auto it = std::partition_point(
      kAddressMap.begin(), kAddressMap.end(),
      [&](const AddressRange &r) { return r.last < id; });
  return *it;
}

std::span<const Mnemonic> abs_identifiers() { return kAbsIdentifiers; }

std::uint16_t abs_identifier(std::string_view mnemonic) {
  for (const auto &m : kAbsIdentifiers)
    if (m.name == mnemonic)
      return m.id;
  throw Error(ErrorCode::UnknownMnemonic,
              "unknown message '" + std::string(mnemonic) + "'",
              std::string(mnemonic));
}

const Frame &arbitrate(std::span<const Frame> contenders) {
  if (contenders.empty())
    throw Error(ErrorCode::Domain, "arbitration needs at least one frame");
  const Frame *best = &contenders.front();
  for (const auto &f : contenders.subspan(1))
    if (f.id < best->id)
      best = &f;
  for (const auto &f : contenders)
    if (&f != best && f.id == best->id)
      throw Error(ErrorCode::IdCollision,
                  "two contenders share identifier " + std::to_string(f.id),
                  f.sender);
  return *best;
}

void Bus::submit(Frame frame) {
  auto same = std::find_if(pending_.begin(), pending_.end(), [&](const Frame &f) {
    return f.id == frame.id && f.sender == frame.sender;
  });
  if (same != pending_.end())
    *same = std::move(frame);
  else
    pending_.push_back(std::move(frame));
}

std::optional<Frame> Bus::step(std::uint64_t tick) {
  if (pending_.empty())
    return std::nullopt;
  const Frame &winner = arbitrate(pending_);
  auto pos = pending_.begin() + (&winner - pending_.data());
  Frame delivered = std::move(*pos);
  pending_.erase(pos);
  delivered.tick = tick;
  log_.push_back(delivered);
  for (const auto &listener : listeners_)
    listener(delivered);
  return delivered;
}

std::string frame_log_csv(std::span<const Frame> frames) {
  std::string out = "tick,id_hex,sender,dlc,payload_hex\n";
  char buf[8];
  for (const auto &f : frames) {
    out += std::to_string(f.tick);
    std::snprintf(buf, sizeof buf, ",0x%03X", f.id);
    out += buf;
    out += ',';
    out += f.sender;
    out += ',';
    out += std::to_string(f.dlc);
    out += ',';
    for (auto b : f.data()) {
      std::snprintf(buf, sizeof buf, "%02X", b);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

} // namespace ftcad::can
