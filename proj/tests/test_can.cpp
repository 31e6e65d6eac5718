#include "ftcad/can.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace ftcad;
using namespace ftcad::can;

TEST_CASE("address map covers 0..2047 in contiguous rows") {
  auto map = address_map();
  REQUIRE(map.size() == 29);
  CHECK(map.front().first == 0);
  CHECK(map.back().last == 2047);
  for (std::size_t i = 1; i < map.size(); ++i)
    CHECK(map[i].first == map[i - 1].last + 1);
  for (std::size_t i = 0; i + 1 < map.size(); ++i)
    CHECK(map[i].last - map[i].first + 1 == 32);
}

TEST_CASE("classification is exhaustive") {
  // Independent oracle: 32-wide blocks below 896, one block above.
  const Category blocks[] = {Category::Emergency, Category::Manager,
                             Category::SoftwarePE, Category::HardwarePE,
                             Category::Actuator, Category::Block1,
                             Category::Block2};
  for (std::uint32_t id = 0; id <= kMaxId; ++id) {
    const auto &r = classify_address(id);
    CHECK(r.first <= id);
    CHECK(id <= r.last);
    Category want = id < 896 ? blocks[id / 128] : Category::Unallocated;
    CHECK(r.category == want);
  }
  CHECK_THROWS_AS(classify_address(2048), Error);
  CHECK(classify_address(0x40).description == "MANAGER TO ALL");
  CHECK(classify_address(0x180).description == "Hardware PE to Manager");
  CHECK(classify_address(0x200).description == "Actuator to Manager");
}

TEST_CASE("ABS identifier table") {
  auto ids = abs_identifiers();
  CHECK(ids.size() == 43);
  std::set<std::string_view> names;
  std::set<std::uint16_t> values;
  for (const auto &m : ids) {
    names.insert(m.name);
    values.insert(m.id);
    CHECK(m.id <= kMaxId);
  }
  CHECK(names.size() == ids.size());
  CHECK(values.size() == ids.size());
  CHECK(abs_identifier("RR_Speed_EstToManager") == 0x180);
  CHECK(abs_identifier("ValvesToManager") == 0x200);
  try {
    abs_identifier("Nope");
    FAIL("no error");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::UnknownMnemonic);
  }
}

TEST_CASE("frames") {
  std::array<std::uint8_t, 9> nine{};
  CHECK_THROWS_AS(Frame::make(1, nine), Error);
  CHECK_THROWS_AS(Frame::make(2048, {}), Error);
  auto f = mask_frame(0x40, 0x8A3, "m", 3);
  CHECK(f.dlc == 4);
  CHECK(f.payload[0] == 0);
  CHECK(f.payload[2] == 0x08);
  CHECK(f.payload[3] == 0xA3);
  CHECK(frame_mask(f) == 0x8A3);
  std::mt19937 rng(1);
  for (int i = 0; i < 1000; ++i) {
    std::uint32_t m = rng();
    CHECK(frame_mask(mask_frame(0x100, m, "x", 0)) == m);
  }
}

TEST_CASE("arbitration picks the lowest identifier") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::uint16_t> ids(1 + rng() % 16);
    for (auto &id : ids)
      id = static_cast<std::uint16_t>(rng() % 2048);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<Frame> frames;
    for (auto id : ids)
      frames.push_back(Frame::make(id, {}, "n" + std::to_string(id)));
    CHECK(arbitrate(frames).id == *std::min_element(ids.begin(), ids.end()));
  }
  std::vector<Frame> clash{Frame::make(5, {}, "a"), Frame::make(5, {}, "b")};
  try {
    arbitrate(clash);
    FAIL("no error");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::IdCollision);
  }
  CHECK_THROWS_AS(arbitrate({}), Error);
}

TEST_CASE("bus delivers one frame per tick, lowest first") {
  Bus bus;
  std::vector<std::uint16_t> seen;
  bus.attach([&](const Frame &f) { seen.push_back(f.id); });
  bus.submit(mask_frame(0x182, 4, "c", 0));
  bus.submit(mask_frame(0x180, 1, "a", 0));
  bus.submit(mask_frame(0x181, 2, "b", 0));
  CHECK(bus.pending() == 3);
  CHECK(bus.step(0)->id == 0x180);
  bus.submit(mask_frame(0x040, 0, "m", 1));
  CHECK(bus.step(1)->id == 0x040);
  CHECK(bus.step(2)->id == 0x181);
  CHECK(bus.step(3)->id == 0x182);
  CHECK_FALSE(bus.step(4));
  CHECK(seen == std::vector<std::uint16_t>{0x180, 0x040, 0x181, 0x182});
  CHECK(bus.log().size() == 4);
  CHECK(bus.log()[1].tick == 1);
}

TEST_CASE("mailbox overwrite keeps only the latest frame per sender and id") {
  Bus bus;
  bus.submit(mask_frame(0x180, 1, "a", 0));
  bus.submit(mask_frame(0x180, 0, "a", 1));
  CHECK(bus.pending() == 1);
  auto f = bus.step(2);
  REQUIRE(f);
  CHECK(frame_mask(*f) == 0);
}

TEST_CASE("frame log CSV") {
  std::vector<Frame> frames{mask_frame(0x40, 0x938, "manager", 7)};
  CHECK(frame_log_csv(frames) ==
        "tick,id_hex,sender,dlc,payload_hex\n7,0x040,manager,4,00000938\n");
}
