#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "flexagg/error.hpp"
#include "flexagg/io.hpp"

using namespace flexagg;

namespace {

ErrorCode parse_code(const io::json& j, bool feeder) {
  try {
    if (feeder) {
      io::parse_feeder(j);
    } else {
      io::parse_fleet(j);
    }
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ConfigError;
}

}  // namespace

TEST_CASE("bundled feeders and fleets parse") {
  const pf::NetworkModel toy = io::read_feeder(FLEXAGG_DATA_DIR "/feeder_toy8.json");
  CHECK(toy.buses.size() == 8);
  CHECK(toy.lines.size() == 7);
  CHECK(toy.substation == "0");
  const der::Fleet fleet = io::read_fleet(FLEXAGG_DATA_DIR "/fleet_toy8.json");
  CHECK(fleet.devices.size() == 6);
  const pf::NetworkModel two = io::read_feeder(FLEXAGG_DATA_DIR "/feeder_2bus.json");
  // z = 0.01 + 0.01j inverts to y = 50 - 50j.
  CHECK(std::abs(two.lines[0].y[0][0] - pf::cplx(50.0, -50.0)) < 1e-9);
  CHECK(two.lines[0].y[1][1] == pf::cplx(0.0, 0.0));
}

TEST_CASE("unknown fields are rejected") {
  io::json feeder = io::read_json(FLEXAGG_DATA_DIR "/feeder_2bus.json");
  feeder["lines"][0]["length"] = 3.0;
  CHECK(parse_code(feeder, true) == ErrorCode::ParseError);
  try {
    io::parse_feeder(feeder);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("length") != std::string::npos);
  }

  io::json fleet = io::read_json(FLEXAGG_DATA_DIR "/fleet_2bus.json");
  fleet["devices"][0]["colour"] = "red";
  CHECK(parse_code(fleet, false) == ErrorCode::ParseError);

  fleet = io::read_json(FLEXAGG_DATA_DIR "/fleet_2bus.json");
  fleet["devices"][0]["type"] = "wind";
  CHECK(parse_code(fleet, false) == ErrorCode::ParseError);

  fleet = io::read_json(FLEXAGG_DATA_DIR "/fleet_2bus.json");
  fleet["devices"][1]["id"] = "pv1";
  CHECK(parse_code(fleet, false) == ErrorCode::ParseError);

  CHECK_THROWS_AS(io::read_feeder("/nonexistent/feeder.json"), Error);
}

TEST_CASE("csv round trip") {
  const auto path = std::filesystem::temp_directory_path() / "flexagg_io_test.csv";
  const std::vector<std::vector<double>> rows = {{0.0, -0.0, 1.0 / 3.0}, {1e-300, -2.5, 1e12}};
  io::write_csv(path.string(), {"a", "b", "c"}, rows);
  const auto back = io::read_csv(path.string(), {"a", "b", "c"});
  REQUIRE(back.size() == 2);
  CHECK(back[0][2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(back[1][1] == -2.5);
  CHECK(io::read_file(path.string()) == "a,b,c\n0,0,0.333333333333\n1e-300,-2.5,1e+12\n");
  CHECK_THROWS_AS(io::read_csv(path.string(), {"a", "b"}), Error);
  std::filesystem::remove(path);
}

TEST_CASE("fnv1a reference values") {
  CHECK(io::fnv1a("") == 14695981039346656037ull);
  CHECK(io::hex64(io::fnv1a("a")) == "af63dc4c8601ec8c");
  CHECK(io::hex64(io::fnv1a("foobar")) == "85944171f73967e8");
}
