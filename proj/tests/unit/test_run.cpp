#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "flexagg/io.hpp"
#include "flexagg/mps.hpp"
#include "flexagg/run.hpp"

using namespace flexagg;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("flexagg_run_" + name);
  fs::remove_all(p);
  return p.string();
}

run::RunConfig toy8(run::Mode mode, const std::string& out, int T = 2) {
  run::RunConfig cfg;
  cfg.mode = mode;
  cfg.feeder = FLEXAGG_DATA_DIR "/feeder_toy8.json";
  cfg.ders = FLEXAGG_DATA_DIR "/fleet_toy8.json";
  cfg.horizon = T;
  cfg.dt = 0.5;
  cfg.out = out;
  return cfg;
}

ErrorCode code_of(const run::RunConfig& cfg) {
  try {
    run::run(cfg);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::NumericalFailure;
}

}  // namespace

TEST_CASE("aggregate-p writes T interval rows and a manifest") {
  const std::string out = scratch("apa");
  const auto res = run::run(toy8(run::Mode::Apa, out, 3));
  const auto rows = io::read_csv(out + "/intervals.csv", {"t", "p_lo_MW", "p_hi_MW"});
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(r[1] <= r[2]);
  CHECK(fs::exists(out + "/intervals.manifest.json"));
  CHECK(fs::exists(out + "/log.jsonl"));
  const auto manifest = io::read_json(out + "/intervals.manifest.json");
  CHECK(manifest["inputs"].size() == 2);
  CHECK(manifest["options"]["tol"] == doctest::Approx(1e-6));
  CHECK(res.summary["rounds"].get<int>() >= 1);
}

TEST_CASE("verify accepts the intervals produced by aggregate-p") {
  const std::string out = scratch("verify");
  run::run(toy8(run::Mode::Apa, out));
  auto cfg = toy8(run::Mode::Verify, out);
  cfg.intervals = out + "/intervals.csv";
  run::run(cfg);
  const auto report = io::read_json(out + "/report.json");
  CHECK(report["n"] == 200);
  CHECK(report["feasible_rate"].get<double>() == 1.0);
  CHECK(report["vertices"]["feasible"] == report["vertices"]["checked"]);
}

TEST_CASE("identical runs give byte-identical files") {
  const std::string a = scratch("det_a"), b = scratch("det_b");
  for (const auto& out : {a, b}) {
    run::run(toy8(run::Mode::Apa, out));
    auto v = toy8(run::Mode::Verify, out);
    v.intervals = out + "/intervals.csv";
    v.threads = out == a ? 1 : 3;
    run::run(v);
  }
  for (const char* f : {"intervals.csv", "log.jsonl", "report.json"}) {
    CHECK_MESSAGE(io::read_file(a + "/" + f) == io::read_file(b + "/" + f), f);
  }
}

TEST_CASE("missing feeder is a configuration error naming the path") {
  auto cfg = toy8(run::Mode::Apa, scratch("missing"));
  cfg.feeder = "/nonexistent/feeder.json";
  try {
    run::run(cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("/nonexistent/feeder.json") != std::string::npos);
    CHECK(run::exit_code(e.code()) == 1);
  }
}

TEST_CASE("bad scalar settings are rejected") {
  auto cfg = toy8(run::Mode::Apa, scratch("bad"));
  cfg.horizon = 0;
  CHECK(code_of(cfg) == ErrorCode::ConfigError);
  cfg.horizon = 2;
  cfg.dt = 0.0;
  CHECK(code_of(cfg) == ErrorCode::ConfigError);
}

TEST_CASE("exit codes") {
  CHECK(run::exit_code(ErrorCode::ParseError) == 1);
  CHECK(run::exit_code(ErrorCode::ConicPresent) == 1);
  CHECK(run::exit_code(ErrorCode::Infeasible) == 2);
  CHECK(run::exit_code(ErrorCode::InfeasibleParams) == 2);
  CHECK(run::exit_code(ErrorCode::BigMTooSmall) == 3);
  CHECK(run::exit_code(ErrorCode::MaxRounds) == 3);
}

TEST_CASE("undispatchable regulation signal exits as infeasible") {
  const std::string out = scratch("pd");
  fs::create_directories(out);
  io::write_csv(out + "/preg.csv", {"t", "p_MW"}, {{0, 9.0}, {1, 0.6}});
  auto cfg = toy8(run::Mode::Pd, out);
  cfg.p_reg = out + "/preg.csv";
  CHECK(code_of(cfg) == ErrorCode::Infeasible);
}

TEST_CASE("disaggregate tracks an interval midpoint") {
  const std::string out = scratch("pd_ok");
  run::run(toy8(run::Mode::Apa, out));
  const auto iv = io::read_csv(out + "/intervals.csv", {"t", "p_lo_MW", "p_hi_MW"});
  std::vector<std::vector<double>> reg;
  for (const auto& r : iv) reg.push_back({r[0], 0.5 * (r[1] + r[2])});
  io::write_csv(out + "/preg.csv", {"t", "p_MW"}, reg);
  auto cfg = toy8(run::Mode::Pd, out);
  cfg.p_reg = out + "/preg.csv";
  cfg.cost = FLEXAGG_DATA_DIR "/cost_toy8.json";
  run::run(cfg);
  std::ifstream in(out + "/dispatch.csv");
  std::string header, line;
  std::getline(in, header);
  CHECK(header.rfind("t,p0_MW,q0_MVar,", 0) == 0);
  for (std::size_t t = 0; t < reg.size(); ++t) {
    REQUIRE(std::getline(in, line));
    const double p0 = std::stod(line.substr(line.find(',') + 1));
    CHECK(p0 == doctest::Approx(reg[t][1]).epsilon(1e-9));
  }
}

TEST_CASE("aggregate-pq and scan-pq agree on the toy feeder") {
  const std::string out = scratch("arpa");
  run::run(toy8(run::Mode::Arpa, out));
  CHECK(io::read_csv(out + "/ellipses_points.csv", {"t", "k", "p_MW", "q_MVar"}).size() == 128);
  auto cfg = toy8(run::Mode::Scan, out);
  cfg.ellipses = out + "/ellipses.csv";
  cfg.res = 0.1;
  cfg.period = 1;
  const auto res = run::run(cfg);
  CHECK(res.summary["inside_ellipse"].get<int>() > 0);
  CHECK(res.summary["inside_infeasible"] == 0);

  cfg.ellipses.clear();
  CHECK(code_of(cfg) == ErrorCode::ConfigError);
}

TEST_CASE("solve reads an MPS model") {
  lp::LpProblem p;
  const int x = p.add_variable(-1.0, 0.0, 4.0, "x");
  const int y = p.add_variable(-2.0, 0.0, 4.0, "y");
  const std::vector<int> idx{x, y};
  const std::vector<double> val{1.0, 1.0};
  p.add_le(idx, val, 5.0);
  lp::MilpProblem m{p, {}};
  const std::string out = scratch("solve");
  fs::create_directories(out);
  {
    std::ofstream f(out + "/m.mps");
    lp::write_mps(f, m);
  }
  const auto res = run::solve_file(out + "/m.mps", out + "/sol.csv");
  CHECK(res.summary["objective"].get<double>() == doctest::Approx(-9.0));
  CHECK(io::read_file(out + "/sol.csv") == "column,value\nC0000001,1\nC0000002,4\n");
}
