// flexagg command-line front end.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "flexagg/run.hpp"

using flexagg::run::Mode;
using flexagg::run::RunConfig;

namespace {

void model_flags(CLI::App* cmd, RunConfig& cfg, bool with_horizon) {
  cmd->add_option("--feeder", cfg.feeder, "feeder JSON (omit for a lossless copper plate)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--ders", cfg.ders, "DER fleet JSON")->required()->check(CLI::ExistingFile);
  if (with_horizon) cmd->add_option("-T,--horizon", cfg.horizon, "number of periods");
  cmd->add_option("--dt", cfg.dt, "period length in hours");
  cmd->add_option("-o,--out", cfg.out, "output directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aggregate power flexibility of distribution-level DERs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FLEXAGG_VERSION);

  RunConfig cfg;
  std::string log_level = "warn";
  double tol = cfg.aro.eps;
  app.add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--tol", tol, "CCG convergence tolerance")->check(CLI::PositiveNumber);
  app.add_option("--big-m", cfg.aro.big_m, "fixed big-M (0: sized from dual bound LPs)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", cfg.seed, "Monte Carlo seed");
  app.add_option("--log-level", log_level, "error|warn|info|debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  auto* apa = app.add_subcommand("aggregate-p", "robust active-power intervals");
  model_flags(apa, cfg, true);
  apa->add_flag("--method1", cfg.aro.heuristic, "baseline with heuristic ordering rows");
  apa->add_flag("--reactive", cfg.aro.reactive, "intervals on q0 instead of p0");
  apa->add_option("--max-rounds", cfg.aro.max_rounds, "CCG round limit (0: 2^T)");

  auto* arpa = app.add_subcommand("aggregate-pq", "robust P-Q ellipse per period");
  model_flags(arpa, cfg, true);
  arpa->add_option("--theta", cfg.thetas, "rotation angle(s) to scan, radians")->expected(1, -1);
  arpa->add_option("--max-rounds", cfg.aro.max_rounds, "CCG round limit (0: min(8^T, 4096))");

  auto* pd = app.add_subcommand("disaggregate", "dispatch DERs to track a regulation signal");
  model_flags(pd, cfg, false);
  pd->add_option("--p-reg", cfg.p_reg, "CSV with t,p_MW[,q_MVar]")
      ->required()
      ->check(CLI::ExistingFile);
  pd->add_option("--cost", cfg.cost, "cost JSON")->check(CLI::ExistingFile);
  pd->add_option("--segments", cfg.segments, "secant segments per quadratic term")
      ->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "Monte Carlo disaggregation check of intervals");
  model_flags(verify, cfg, false);
  verify->add_option("--intervals", cfg.intervals, "intervals.csv from aggregate-p")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("-n,--samples", cfg.samples, "number of sampled trajectories");
  verify->add_flag("!--no-vertices", cfg.check_vertices, "skip the 2^T vertex check");

  auto* scan = app.add_subcommand("scan-pq", "P-Q feasibility grid of one period");
  model_flags(scan, cfg, true);
  scan->add_option("--period", cfg.period, "period to scan (0-based)");
  scan->add_option("--res", cfg.res, "grid spacing")->check(CLI::PositiveNumber);
  std::vector<double> p_range, q_range;
  scan->add_option("--p-range", p_range, "p0 range lo hi")->expected(2);
  scan->add_option("--q-range", q_range, "q0 range lo hi")->expected(2);
  scan->add_option("--ellipse", cfg.ellipses, "ellipses.csv from aggregate-pq")
      ->check(CLI::ExistingFile);

  auto* solve = app.add_subcommand("solve", "solve a raw MPS model (LP or binary MILP)");
  std::string mps, mps_out;
  solve->add_option("model", mps, "MPS file")->required()->check(CLI::ExistingFile);
  solve->add_option("-o,--out", mps_out, "CSV of column values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    cfg.log_level = flexagg::run::parse_log_level(log_level);
    cfg.aro.eps = tol;
    if (p_range.size() == 2) cfg.p_range = std::array<double, 2>{p_range[0], p_range[1]};
    if (q_range.size() == 2) cfg.q_range = std::array<double, 2>{q_range[0], q_range[1]};

    flexagg::run::RunResult res;
    if (solve->parsed()) {
      res = flexagg::run::solve_file(mps, mps_out, cfg.aro.milp);
    } else {
      if (apa->parsed()) cfg.mode = Mode::Apa;
      if (arpa->parsed()) cfg.mode = Mode::Arpa;
      if (pd->parsed()) cfg.mode = Mode::Pd;
      if (verify->parsed()) cfg.mode = Mode::Verify;
      if (scan->parsed()) cfg.mode = Mode::Scan;
      res = flexagg::run::run(cfg);
    }
    std::cout << res.summary.dump(2) << '\n';
    return 0;
  } catch (const flexagg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return flexagg::run::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
