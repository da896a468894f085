#include <array>
#include <random>
#include <sstream>

#include "doctest.h"
#include "flexagg/error.hpp"
#include "flexagg/mps.hpp"
#include "support/lp_oracles.hpp"

using namespace flexagg::lp;

TEST_CASE("mps number fits twelve characters") {
  CHECK(mps_number(1.0) == "1");
  CHECK(mps_number(-0.5) == "-0.5");
  CHECK(mps_number(1.0 / 3.0) == "0.3333333333");
  CHECK(mps_number(-1.0 / 3.0).size() <= 12);
  CHECK(mps_number(-1.234567890123e-200).size() <= 12);
}

TEST_CASE("mps writer field layout") {
  MilpProblem m;
  m.lp.add_variable(1.0, 0.0, kInf);
  m.lp.add_variable(-2.0, -1.0, 1.0);
  m.binaries = {};
  const std::array<int, 2> idx{0, 1};
  const std::array<double, 2> val{1.0, 2.5};
  m.lp.add_row(idx, val, -1.0, 4.0);
  std::ostringstream os;
  write_mps(os, m, "TINY");
  const std::string expected =
      "NAME          TINY\n"
      "ROWS\n"
      " N  OBJ\n"
      " L  R0000001\n"
      "COLUMNS\n"
      "    C0000001  OBJ       1\n"
      "    C0000001  R0000001  1\n"
      "    C0000002  OBJ       -2\n"
      "    C0000002  R0000001  2.5\n"
      "RHS\n"
      "    RHS       R0000001  4\n"
      "RANGES\n"
      "    RNG       R0000001  5\n"
      "BOUNDS\n"
      " LO BND       C0000002  -1\n"
      " UP BND       C0000002  1\n"
      "ENDATA\n";
  CHECK(os.str() == expected);
}

TEST_CASE("mps round trip preserves optima") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = oracle::random_lp(rng, 10, 6);
    MilpProblem m{inst.lp, {}};
    std::ostringstream os;
    write_mps(os, m);
    std::istringstream is(os.str());
    const MilpProblem back = read_mps(is);
    REQUIRE(back.lp.num_rows() == inst.lp.num_rows());
    REQUIRE(back.lp.num_cols() == inst.lp.num_cols());
    const double a = solve_lp(inst.lp).objective;
    const double b = solve_lp(back.lp).objective;
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
  }
  auto k = oracle::random_knapsack(rng, 8, 2);
  std::ostringstream os;
  write_mps(os, k.milp);
  std::istringstream is(os.str());
  const MilpProblem back = read_mps(is);
  CHECK(back.binaries == k.milp.binaries);
  CHECK(solve_milp(back).objective ==
        doctest::Approx(solve_milp(k.milp).objective).epsilon(1e-9));
}

TEST_CASE("mps reader handles free rows, fixed and free bounds") {
  const char* text =
      "NAME          T\n"
      "ROWS\n"
      " N  COST\n"
      " E  LIM1\n"
      " G  LIM2\n"
      " N  FREE\n"
      "COLUMNS\n"
      "    X         COST      1.0   LIM1      1.0\n"
      "    X         FREE      3.0\n"
      "    Y         COST      1.0   LIM2      1.0\n"
      "RHS\n"
      "    RHS       LIM1      2.0   LIM2      -1\n"
      "RANGES\n"
      "    RNG       LIM1      -0.5\n"
      "BOUNDS\n"
      " FR BND       X\n"
      " FX BND       Y         -1\n"
      "ENDATA\n";
  std::istringstream is(text);
  const MilpProblem m = read_mps(is);
  CHECK(m.lp.num_rows() == 3);
  CHECK(m.lp.row_lo()[0] == 1.5);
  CHECK(m.lp.row_hi()[0] == 2.0);
  CHECK(m.lp.row_lo()[1] == -1.0);
  CHECK(m.lp.col_lo()[0] == -kInf);
  CHECK(m.lp.col_lo()[1] == -1.0);
  CHECK(m.lp.col_hi()[1] == -1.0);
  const Solution s = solve_lp(m.lp);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(0.5));
}

TEST_CASE("mps reader reports the failing line") {
  std::istringstream is("NAME X\nROWS\n N  OBJ\nCOLUMNS\n    X  NOPE  1\nENDATA\n");
  try {
    read_mps(is);
    FAIL("expected ParseError");
  } catch (const flexagg::Error& e) {
    CHECK(e.code() == flexagg::ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
}
