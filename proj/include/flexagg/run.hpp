#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flexagg/aro.hpp"
#include "flexagg/error.hpp"
#include "json.hpp"

namespace flexagg::run {

enum class Mode { Apa, Arpa, Pd, Verify, Scan };

const char* to_string(Mode m);

enum class LogLevel { Error, Warn, Info, Debug };

LogLevel parse_log_level(const std::string& s);

struct RunConfig {
  Mode mode = Mode::Apa;
  /// Empty feeder: lossless copper plate with zero exogenous load.
  std::string feeder;
  std::string ders;
  int horizon = 1;
  double dt = 1.0;
  /// Output directory, created when missing. Each command writes a fixed
  /// file name (intervals.csv, ellipses.csv, dispatch.csv, report.json or
  /// grid.csv) plus "<name>.manifest.json" and, for aggregation, log.jsonl.
  std::string out;
  int threads = 1;
  std::uint64_t seed = 42;
  LogLevel log_level = LogLevel::Warn;

  aro::AroOptions aro;
  // aggregate-pq
  std::vector<double> thetas{0.0};
  int n_squares = 2;
  // disaggregate
  std::string p_reg;
  std::string cost;
  bool explain = true;
  int segments = 16;
  // verify
  std::string intervals;
  int samples = 200;
  bool check_vertices = true;
  // scan-pq; with T > 1 the other periods sit at the ellipse centers
  double res = 0.5;
  int period = 0;
  std::optional<std::array<double, 2>> p_range, q_range;
  std::string ellipses;
};

/// Files written and a JSON summary (also stored in the manifest).
struct RunResult {
  std::vector<std::string> outputs;
  nlohmann::json summary;
};

/// Runs one command. Throws flexagg::Error; see exit_code().
RunResult run(const RunConfig& cfg);

/// 1 for configuration and input errors, 2 for infeasible models, 3 for
/// numerical failures (solver status, non-convergence, big-M, round limits).
int exit_code(ErrorCode code);

/// Solves a raw MPS model; writes "column,value" lines when out is set.
RunResult solve_file(const std::string& mps_path, const std::string& out,
                     const lp::MilpOptions& opt = {});

}  // namespace flexagg::run
