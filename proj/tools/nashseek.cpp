#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nashseek/nashseek.hpp"

namespace ns = nashseek;

namespace {

enum Exit { kOk = 0, kError = 1, kInput = 2, kRuntime = 3 };

std::filesystem::path output_dir(const ns::RunConfig& cfg)
{
  if (const char* env = std::getenv("NASHSEEK_OUTPUT_DIR"); env && *env) return env;
  return cfg.output.dir;
}

void print_vector(const char* label, const Eigen::VectorXd& v)
{
  std::printf("%s", label);
  for (Eigen::Index k = 0; k < v.size(); ++k) std::printf("%s%.12g", k ? " " : " [", v(k));
  std::printf("]\n");
}

int cmd_simulate(const std::string& path)
{
  const ns::RunConfig cfg = ns::load_run_config(path);
  const ns::Seeker seeker = ns::build_seeker(cfg);
  const ns::ActionProfile x_star = ns::nash_point(seeker.game());
  const auto dir = output_dir(cfg);
  try {
    const ns::RunResult r = ns::simulate(cfg, seeker, x_star);
    ns::write_run_artifacts(dir, cfg.output.prefix, r.trace, r.layout, x_star, ns::run_report(r, cfg), cfg.output.plots);
    const auto& v = r.verdict;
    std::printf("t_final %.6g  action_error %.3e  consensus_error %.3e\n", v.final_time, v.action.value,
                v.consensus.value);
    std::printf("verdict: action %s, consensus %s, gains_monotone %s, gains_settled %s\n", v.action.pass ? "yes" : "no",
                v.consensus.pass ? "yes" : "no", v.gains_monotone.pass ? "yes" : "no",
                v.gains_settled.pass ? "yes" : "no");
    std::printf("artifacts in %s\n", dir.string().c_str());
    return kOk;
  } catch (const ns::DivergenceError& e) {
    const auto& partial = e.partial_trace();
    nlohmann::json report;
    report["strategy"] = std::string(ns::to_string(seeker.layout().kind));
    report["seed"] = cfg.init.seed;
    report["diverged"] = true;
    report["error"] = e.what();
    report["last_finite_time"] = partial.empty() ? 0.0 : partial.final_time();
    ns::write_run_artifacts(dir, cfg.output.prefix, partial, seeker.layout(), x_star, report, cfg.output.plots);
    std::fprintf(stderr, "divergence: %s (partial artifacts in %s)\n", e.what(), dir.string().c_str());
    return kRuntime;
  }
}

int cmd_nash(const std::string& path)
{
  const ns::RunConfig cfg = ns::load_run_config(path);
  const ns::GameModel game = ns::build_game(cfg.game);
  try {
    const ns::ActionProfile x = ns::nash_point(game);
    print_vector("x*", x);
    std::printf("residual %.3e\n", ns::pseudo_gradient(game, x).norm());
    return kOk;
  } catch (const ns::OracleFailure& e) {
    std::fprintf(stderr, "oracle failure: %s\n", e.what());
    print_vector("best iterate", e.best_iterate());
    std::printf("best residual %.3e\n", e.best_residual());
    return kRuntime;
  }
}

int cmd_sweep(const std::string& path, int jobs)
{
  const ns::RunConfig cfg = ns::load_run_config(path);
  if (!cfg.sweep) throw ns::ConfigError("/sweep", "sweep section missing");
  ns::build_seeker(cfg);  // topology and assumption checks before any run
  const ns::SweepResult r = ns::run_sweep(cfg, jobs);
  const auto dir = output_dir(cfg);
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / (cfg.output.prefix + "_sweep_rows.csv"));
    ns::write_sweep_rows_csv(out, r);
  }
  {
    std::ofstream out(dir / (cfg.output.prefix + "_sweep_summary.csv"));
    ns::write_sweep_summary_csv(out, r);
  }
  std::printf("%-10s %-10s %-6s %-9s %-12s %-12s %-10s\n", "param", "value", "seed", "converged", "action_err",
              "consensus", "max_gain");
  for (const auto& row : r.rows)
    std::printf("%-10s %-10.4g %-6llu %-9s %-12.3e %-12.3e %-10.4g%s\n", row.parameter.empty() ? "-" : row.parameter.c_str(),
                row.value, static_cast<unsigned long long>(row.seed), row.failed ? "failed" : row.converged ? "yes" : "no",
                row.final_action_error, row.final_consensus_error, row.max_gain, row.failed ? "  (diverged)" : "");
  for (const auto& a : r.aggregates) {
    if (a.parameter.empty()) std::printf("aggregate: ");
    else std::printf("aggregate %s=%g: ", a.parameter.c_str(), a.value);
    std::printf("%zu/%zu converged, %zu failed\n", a.converged, a.runs, a.failed);
  }
  if (r.rows.empty()) std::printf("no runs (empty seed list)\n");
  return kOk;
}

int cmd_validate(const std::string& path)
{
  const ns::RunConfig cfg = ns::load_run_config(path);
  const ns::Seeker seeker = ns::build_seeker(cfg);
  const ns::GameModel& game = seeker.game();
  const auto box = ns::SamplingBox::uniform(game.profile_size(), cfg.init.x.first, cfg.init.x.second);
  const ns::AssumptionReport report = ns::validate_assumptions(game, box, 200, cfg.init.seed);
  nlohmann::json out;
  out["assumptions"] = ns::to_json(report);
  if (!report.monotone())
    throw ns::AssumptionViolation("strong monotonicity of the pseudo-gradient: sampled modulus " +
                                  std::to_string(report.monotonicity_modulus) + " is not positive");
  if (seeker.switching())
    out["bounds"] = ns::to_json(ns::theory_bounds(report, *seeker.schedule()));
  else
    out["bounds"] = ns::to_json(ns::theory_bounds(report, seeker.graph_at(0.0)));
  std::printf("%s\n", out.dump(2).c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Distributed Nash equilibrium seeking simulator"};
  app.require_subcommand(1);
  std::string path;
  int jobs = 0;

  auto* sim = app.add_subcommand("simulate", "run one trajectory and write trace, verdict and plots");
  sim->add_option("config", path, "JSON run configuration")->required();
  auto* nash = app.add_subcommand("nash", "print the equilibrium of the configured game");
  nash->add_option("config", path, "JSON run configuration")->required();
  auto* sweep = app.add_subcommand("sweep", "run the configured seed list / parameter grid");
  sweep->add_option("config", path, "JSON run configuration")->required();
  sweep->add_option("--jobs", jobs, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
  auto* val = app.add_subcommand("validate", "check graph connectivity and game assumptions");
  val->add_option("config", path, "JSON run configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (sim->parsed()) return cmd_simulate(path);
    if (nash->parsed()) return cmd_nash(path);
    if (sweep->parsed()) return cmd_sweep(path, jobs);
    if (val->parsed()) return cmd_validate(path);
  } catch (const ns::InputError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kInput;
  } catch (const ns::AssumptionViolation& e) {
    std::fprintf(stderr, "assumption violated: %s\n", e.what());
    return kInput;
  } catch (const ns::OracleFailure& e) {
    std::fprintf(stderr, "oracle failure: %s\n", e.what());
    print_vector("best iterate", e.best_iterate());
    return kRuntime;
  } catch (const ns::StiffnessError& e) {
    std::fprintf(stderr, "integration failed: %s\n", e.what());
    return kRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
  return kError;
}
