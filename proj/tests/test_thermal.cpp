#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "thermoguard/errors.hpp"
#include "thermoguard/thermal.hpp"

using namespace thermoguard;
using testutil::int_in;
using testutil::uniform;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) {
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

std::vector<std::uint8_t> cat(std::vector<std::uint8_t> head,
                              const std::vector<std::uint8_t>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

ThermalFrame random_frame(std::mt19937_64& rng, int w, int h, std::uint16_t max_value) {
  ThermalFrame f;
  f.id = "rand";
  f.width = w;
  f.height = h;
  f.max_value = max_value;
  f.pixels.resize(static_cast<std::size_t>(w) * h);
  for (auto& p : f.pixels) {
    p = static_cast<std::uint16_t>(testutil::below(rng, static_cast<std::uint64_t>(max_value) + 1));
  }
  return f;
}

}  // namespace

TEST_CASE("parse_frame decodes an 8-bit graymap") {
  const auto bytes = cat(bytes_of("P5\n3 2\n255\n"), {10, 20, 30, 40, 50, 60});
  const ThermalFrame f = parse_frame(bytes, "t");
  CHECK(f.width == 3);
  CHECK(f.height == 2);
  CHECK(f.max_value == 255);
  CHECK(f.pixels == std::vector<std::uint16_t>{10, 20, 30, 40, 50, 60});
  CHECK(f.at(0, 0) == 10);
  CHECK(f.at(2, 1) == 60);
}

TEST_CASE("parse_frame decodes a 16-bit graymap big-endian") {
  const auto bytes = cat(bytes_of("P5\n2 1\n65535\n"), {0x01, 0x02, 0xFF, 0xFE});
  const ThermalFrame f = parse_frame(bytes, "t");
  CHECK(f.max_value == 65535);
  CHECK(f.pixels == std::vector<std::uint16_t>{0x0102, 0xFFFE});
}

TEST_CASE("maxval strictly between 255 and 256 boundaries selects the sample width") {
  // maxval 255 -> one byte per sample; maxval 256 -> two bytes.
  const auto one = cat(bytes_of("P5\n1 1\n255\n"), {200});
  CHECK(parse_frame(one, "t").pixels[0] == 200);
  const auto two = cat(bytes_of("P5\n1 1\n256\n"), {0x00, 0xC8});
  CHECK(parse_frame(two, "t").pixels[0] == 200);
}

TEST_CASE("parse_frame reduces a pixmap to mean luminance") {
  // (r+g+b)/3 truncated: (10+20+31)/3 = 20 remainder 1 -> 20.
  const auto bytes = cat(bytes_of("P6\n2 1\n255\n"), {10, 20, 31, 90, 90, 90});
  const ThermalFrame f = parse_frame(bytes, "t");
  CHECK(f.pixels == std::vector<std::uint16_t>{20, 90});
}

TEST_CASE("parse_frame accepts header comments and flexible whitespace") {
  const auto bytes = cat(bytes_of("P5 # graymap\n# taken at noon\n 2\t1 # dims\n255\n"), {7, 8});
  const ThermalFrame f = parse_frame(bytes, "t");
  CHECK(f.width == 2);
  CHECK(f.height == 1);
  CHECK(f.pixels == std::vector<std::uint16_t>{7, 8});
}

TEST_CASE("parse_frame tolerates trailing bytes after the payload") {
  const auto bytes = cat(bytes_of("P5\n1 1\n255\n"), {5, 99, 99});
  CHECK(parse_frame(bytes, "t").pixels == std::vector<std::uint16_t>{5});
}

TEST_CASE("parse_frame failure taxonomy") {
  SUBCASE("bad magic") {
    CHECK_THROWS_AS(parse_frame(cat(bytes_of("P4\n1 1\n255\n"), {0}), "t"), ParseError);
    CHECK_THROWS_AS(parse_frame(bytes_of("nonsense"), "t"), ParseError);
  }
  SUBCASE("short payload") {
    const auto bytes = cat(bytes_of("P5\n2 2\n255\n"), {1, 2, 3});
    CHECK_THROWS_AS(parse_frame(bytes, "t"), LengthError);
    try {
      parse_frame(bytes, "t");
    } catch (const LengthError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("3") != std::string::npos);
      CHECK(msg.find("4") != std::string::npos);
    }
  }
  SUBCASE("maxval out of range") {
    CHECK_THROWS_AS(parse_frame(cat(bytes_of("P5\n1 1\n0\n"), {0}), "t"), ParseError);
    CHECK_THROWS_AS(parse_frame(cat(bytes_of("P5\n1 1\n65536\n"), {0, 0}), "t"), ParseError);
  }
  SUBCASE("sample above maxval") {
    CHECK_THROWS_AS(parse_frame(cat(bytes_of("P5\n1 1\n100\n"), {101}), "t"), ParseError);
  }
  SUBCASE("non-numeric dimension") {
    CHECK_THROWS_AS(parse_frame(cat(bytes_of("P5\nx 1\n255\n"), {0}), "t"), ParseError);
  }
}

TEST_CASE("write_frame then parse_frame is the identity at both depths") {
  std::mt19937_64 rng(121);
  for (int iter = 0; iter < 40; ++iter) {
    const std::uint16_t max_value = (iter % 2 == 0) ? 255 : 65535;
    const ThermalFrame f = random_frame(rng, int_in(rng, 1, 9), int_in(rng, 1, 9), max_value);
    const ThermalFrame back = parse_frame(write_frame(f), f.id);
    CHECK(back.width == f.width);
    CHECK(back.height == f.height);
    CHECK(back.max_value == f.max_value);
    CHECK(back.pixels == f.pixels);
  }
}

TEST_CASE("write_frame rejects counts above the declared depth") {
  ThermalFrame f;
  f.width = 1;
  f.height = 1;
  f.max_value = 255;
  f.pixels = {300};
  CHECK_THROWS_AS(write_frame(f), DomainError);
}

TEST_CASE("load_frame_file reads raw16 with a header sidecar") {
  testutil::TempDir dir("raw16");
  SUBCASE("little-endian") {
    testutil::write_file(dir.file("a.raw16"), std::vector<std::uint8_t>{0x02, 0x01, 0xFE, 0xFF});
    testutil::write_file(dir.file("a.raw16.hdr"), std::string("2 1 le\n"));
    const ThermalFrame f = load_frame_file(dir.file("a.raw16"));
    CHECK(f.id == "a");
    CHECK(f.width == 2);
    CHECK(f.max_value == 65535);
    CHECK(f.pixels == std::vector<std::uint16_t>{0x0102, 0xFFFE});
  }
  SUBCASE("big-endian") {
    testutil::write_file(dir.file("b.raw"), std::vector<std::uint8_t>{0x01, 0x02, 0xFF, 0xFE});
    testutil::write_file(dir.file("b.raw.hdr"), std::string("1 2 be\n"));
    const ThermalFrame f = load_frame_file(dir.file("b.raw"));
    CHECK(f.height == 2);
    CHECK(f.pixels == std::vector<std::uint16_t>{0x0102, 0xFFFE});
  }
  SUBCASE("missing sidecar") {
    testutil::write_file(dir.file("c.raw16"), std::vector<std::uint8_t>{0, 0});
    CHECK_THROWS_AS(load_frame_file(dir.file("c.raw16")), IoError);
  }
  SUBCASE("length mismatch") {
    testutil::write_file(dir.file("d.raw16"), std::vector<std::uint8_t>{0, 0, 0});
    testutil::write_file(dir.file("d.raw16.hdr"), std::string("2 1 le\n"));
    CHECK_THROWS_AS(load_frame_file(dir.file("d.raw16")), LengthError);
  }
  SUBCASE("bad endian token") {
    testutil::write_file(dir.file("e.raw16"), std::vector<std::uint8_t>{0, 0});
    testutil::write_file(dir.file("e.raw16.hdr"), std::string("1 1 pdp\n"));
    CHECK_THROWS_AS(load_frame_file(dir.file("e.raw16")), ParseError);
  }
}

TEST_CASE("load_frame_file uses the filename stem as the frame id") {
  testutil::TempDir dir("stem");
  testutil::write_file(dir.file("lobby_017.pgm"),
                       cat(bytes_of("P5\n1 1\n255\n"), {1}));
  CHECK(load_frame_file(dir.file("lobby_017.pgm")).id == "lobby_017");
  CHECK_THROWS_AS(load_frame_file(dir.file("missing.pgm")), IoError);
}

TEST_CASE("load_frame_file mentions the path on parse failures") {
  testutil::TempDir dir("badfile");
  testutil::write_file(dir.file("x.pgm"), std::string("P9 junk"));
  try {
    load_frame_file(dir.file("x.pgm"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("x.pgm") != std::string::npos);
  }
}

TEST_CASE("to_celsius applies the linear calibration") {
  TempCalibration cal;
  cal.slope = 1.0;
  cal.offset = 0.0;
  CHECK(to_celsius(36, cal) == 36.0);
  cal.offset = 5.0;
  CHECK(to_celsius(30, cal) == 35.0);
  cal.slope = 0.01;
  cal.offset = -40.0;
  CHECK(to_celsius(7750, cal) == 37.5);  // 77.5 - 40
  CHECK_THROWS_AS(to_celsius(1, std::nullopt), ConfigError);
}

TEST_CASE("calibration validation") {
  TempCalibration cal;
  cal.slope = 0.0;
  CHECK_THROWS_AS(cal.validate(), ConfigError);
  cal.slope = 0.01;
  CHECK_NOTHROW(cal.validate());
}

TEST_CASE("person_temperature over a constant region is that temperature") {
  ThermalFrame f;
  f.width = 8;
  f.height = 8;
  f.pixels.assign(64, 350);
  f.max_value = 65535;
  f.calibration = TempCalibration{0.1, 0.0};  // 35.0 C everywhere

  FeverConfig cfg;
  for (const FeverConfig::Stat stat : {FeverConfig::Stat::kMax, FeverConfig::Stat::kPercentile}) {
    cfg.stat = stat;
    const PersonTemperature pt = person_temperature(f, {1, 1, 4, 4}, 3, cfg);
    CHECK(pt.box_index == 3);
    CHECK(pt.temperature_c == 35.0);
    CHECK_FALSE(pt.fever);
  }
}

TEST_CASE("a single hot pixel trips the max statistic but not p95") {
  ThermalFrame f;
  f.width = 10;
  f.height = 10;
  f.pixels.assign(100, 360);  // 36.0 C background
  f.pixels[5 * 10 + 5] = 395;  // one 39.5 C pixel
  f.max_value = 65535;
  f.calibration = TempCalibration{0.1, 0.0};

  FeverConfig cfg;
  cfg.fever_threshold_c = 37.5;

  cfg.stat = FeverConfig::Stat::kMax;
  const PersonTemperature max_pt = person_temperature(f, {0, 0, 10, 10}, 0, cfg);
  CHECK(max_pt.temperature_c == 39.5);
  CHECK(max_pt.fever);

  cfg.stat = FeverConfig::Stat::kPercentile;
  cfg.percentile = 95.0;
  const PersonTemperature p95_pt = person_temperature(f, {0, 0, 10, 10}, 0, cfg);
  CHECK(p95_pt.temperature_c == 36.0);  // k = ceil(0.95*100) = 95 of 100 sorted
  CHECK_FALSE(p95_pt.fever);
}

TEST_CASE("fever triggers exactly at the threshold") {
  ThermalFrame f;
  f.width = 2;
  f.height = 1;
  f.pixels = {7750, 7750};
  f.max_value = 65535;
  f.calibration = TempCalibration{0.01, -40.0};  // both pixels 37.5 C

  FeverConfig cfg;
  cfg.stat = FeverConfig::Stat::kMax;
  cfg.fever_threshold_c = 37.5;
  CHECK(person_temperature(f, {0, 0, 2, 1}, 0, cfg).fever);  // >= rule
  cfg.fever_threshold_c = std::nextafter(37.5, 100.0);
  CHECK_FALSE(person_temperature(f, {0, 0, 2, 1}, 0, cfg).fever);
}

TEST_CASE("nearest-rank percentile hand case") {
  ThermalFrame f;
  f.width = 4;
  f.height = 1;
  f.pixels = {30, 10, 40, 20};  // sorted: 10 20 30 40
  f.max_value = 255;
  f.calibration = TempCalibration{1.0, 0.0};

  FeverConfig cfg;
  cfg.stat = FeverConfig::Stat::kPercentile;
  cfg.fever_threshold_c = 1000.0;
  const BoundingBox all{0, 0, 4, 1};

  cfg.percentile = 50.0;  // k = ceil(2) = 2 -> 20
  CHECK(person_temperature(f, all, 0, cfg).temperature_c == 20.0);
  cfg.percentile = 51.0;  // k = ceil(2.04) = 3 -> 30
  CHECK(person_temperature(f, all, 0, cfg).temperature_c == 30.0);
  cfg.percentile = 100.0;  // k = 4 -> max
  CHECK(person_temperature(f, all, 0, cfg).temperature_c == 40.0);
  cfg.percentile = 0.5;  // k = ceil(0.02) = 1 -> min
  CHECK(person_temperature(f, all, 0, cfg).temperature_c == 10.0);
}

TEST_CASE("percentile never exceeds the max statistic") {
  std::mt19937_64 rng(131);
  for (int iter = 0; iter < 60; ++iter) {
    ThermalFrame f = random_frame(rng, int_in(rng, 2, 12), int_in(rng, 2, 12), 65535);
    f.calibration = TempCalibration{0.01, -40.0};
    // Anchor the box strictly inside the frame so clipping never empties it.
    const BoundingBox box{uniform(rng, 0.0, f.width - 1.0), uniform(rng, 0.0, f.height - 1.0),
                          uniform(rng, 1.0, 10.0), uniform(rng, 1.0, 10.0)};
    FeverConfig max_cfg;
    max_cfg.stat = FeverConfig::Stat::kMax;
    FeverConfig pct_cfg;
    pct_cfg.stat = FeverConfig::Stat::kPercentile;
    pct_cfg.percentile = uniform(rng, 1.0, 100.0);
    const double vmax = person_temperature(f, box, 0, max_cfg).temperature_c;
    const double vpct = person_temperature(f, box, 0, pct_cfg).temperature_c;
    CHECK(vpct <= vmax);
  }
}

TEST_CASE("p100 equals the max statistic") {
  std::mt19937_64 rng(132);
  ThermalFrame f = random_frame(rng, 9, 9, 65535);
  f.calibration = TempCalibration{0.01, -40.0};
  FeverConfig max_cfg;
  max_cfg.stat = FeverConfig::Stat::kMax;
  FeverConfig p100;
  p100.stat = FeverConfig::Stat::kPercentile;
  p100.percentile = 100.0;
  const BoundingBox box{1, 2, 5, 4};
  CHECK(person_temperature(f, box, 0, p100).temperature_c ==
        person_temperature(f, box, 0, max_cfg).temperature_c);
}

TEST_CASE("boxes are clipped to the frame and empty overlap is rejected") {
  ThermalFrame f;
  f.width = 4;
  f.height = 4;
  f.pixels.assign(16, 100);
  f.pixels[0] = 200;  // only (0,0) is hot
  f.max_value = 255;
  f.calibration = TempCalibration{1.0, 0.0};

  FeverConfig cfg;
  cfg.stat = FeverConfig::Stat::kMax;
  cfg.fever_threshold_c = 1000.0;

  // A box hanging off the top-left still sees the hot corner.
  CHECK(person_temperature(f, {-3, -3, 4, 4}, 0, cfg).temperature_c == 200.0);
  // Entirely outside.
  CHECK_THROWS_AS(person_temperature(f, {10, 10, 3, 3}, 0, cfg), DegenerateInputError);
  CHECK_THROWS_AS(person_temperature(f, {-5, 0, 3, 2}, 0, cfg), DegenerateInputError);
}

TEST_CASE("person_temperature is invariant under frame translation") {
  std::mt19937_64 rng(133);
  ThermalFrame f = random_frame(rng, 12, 12, 65535);
  f.calibration = TempCalibration{0.01, -40.0};

  // Copy the 4x4 region at (2,3) to (6,5) in a second frame.
  ThermalFrame g = f;
  for (auto& p : g.pixels) p = 0;
  for (int dy = 0; dy < 4; ++dy) {
    for (int dx = 0; dx < 4; ++dx) {
      g.pixels[static_cast<std::size_t>(5 + dy) * 12 + (6 + dx)] = f.at(2 + dx, 3 + dy);
    }
  }
  FeverConfig cfg;
  cfg.stat = FeverConfig::Stat::kPercentile;
  cfg.percentile = 75.0;
  CHECK(person_temperature(f, {2, 3, 4, 4}, 0, cfg).temperature_c ==
        person_temperature(g, {6, 5, 4, 4}, 0, cfg).temperature_c);
}

TEST_CASE("person_temperature requires a calibration") {
  ThermalFrame f;
  f.width = 2;
  f.height = 2;
  f.pixels.assign(4, 10);
  FeverConfig cfg;
  CHECK_THROWS_AS(person_temperature(f, {0, 0, 2, 2}, 0, cfg), ConfigError);
}

TEST_CASE("fever config validation") {
  FeverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.percentile = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.percentile = 101.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = FeverConfig{};
  cfg.stat = FeverConfig::Stat::kMax;
  cfg.percentile = 0.0;  // ignored in max mode
  CHECK_NOTHROW(cfg.validate());
  cfg.fever_threshold_c = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("to_tensor replicates normalized counts across three channels") {
  ThermalFrame f;
  f.width = 2;
  f.height = 1;
  f.pixels = {0, 51};
  f.max_value = 255;
  const Tensor t = to_tensor(f);
  REQUIRE(t.channels() == 3);
  REQUIRE(t.height() == 1);
  REQUIRE(t.width() == 2);
  for (int c = 0; c < 3; ++c) {
    CHECK(t.at(c, 0, 0) == 0.0f);
    CHECK(t.at(c, 0, 1) == doctest::Approx(0.2f).epsilon(1e-6));
  }

  ThermalFrame wide;
  wide.width = 1;
  wide.height = 1;
  wide.pixels = {65535};
  wide.max_value = 65535;
  CHECK(to_tensor(wide).at(0, 0, 0) == 1.0f);
}
