#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "nashseek/config.hpp"
#include "nashseek/diagnostics.hpp"
#include "nashseek/dynamics.hpp"
#include "nashseek/game.hpp"
#include "nashseek/graph.hpp"
#include "nashseek/integrator.hpp"
#include "nashseek/random.hpp"

namespace nashseek {

inline GameModel build_game(const GameSpec& spec)
{
  if (!spec.quadratic) return game_from_registry(spec.registry);
  const auto& q = *spec.quadratic;
  const int dim = q.n_players * q.action_dim;
  Eigen::MatrixXd qm(dim, dim);
  Eigen::VectorXd b(dim);
  for (int r = 0; r < dim; ++r) {
    b(r) = q.b[static_cast<std::size_t>(r)];
    for (int c = 0; c < dim; ++c) qm(r, c) = q.q[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return make_quadratic_game(q.n_players, q.action_dim, qm, b);
}

inline CommGraph build_graph(const GraphSpec& spec)
{
  if (spec.preset == "ring") return CommGraph::ring(spec.n);
  if (spec.preset == "path") return CommGraph::path(spec.n);
  if (spec.preset == "complete") return CommGraph::complete(spec.n);
  return CommGraph::from_edges(spec.n, spec.edges);
}

inline SwitchingSchedule build_schedule(const TopologySpec& spec)
{
  std::vector<CommGraph> graphs;
  std::map<std::string, std::size_t> index;
  for (const auto& [name, g] : spec.graphs) {
    index[name] = graphs.size();
    graphs.push_back(build_graph(g));
  }
  std::vector<SwitchingSchedule::Segment> segments;
  for (const auto& e : spec.schedule) segments.push_back({e.t, index.at(e.graph)});
  return SwitchingSchedule(std::move(graphs), std::move(segments), spec.min_dwell);
}

inline StrategyConfig build_strategy(const StrategySpec& spec, int n)
{
  switch (spec.kind) {
    case StrategyKind::Fixed:
      return StrategyConfig::fixed(spec.theta.value_or(1.0), spec.theta_bar.value_or(MatrixParam{}).expand(n));
    case StrategyKind::NodeAdaptive:
      return StrategyConfig::node_adaptive(spec.gamma.value_or(MatrixParam{}).expand(n));
    case StrategyKind::EdgeAdaptive: {
      auto c = StrategyConfig::edge_adaptive();
      c.cbar_rate_uses_c = spec.cbar_rate_uses_c;
      return c;
    }
    case StrategyKind::EdgeSwitching: {
      auto c = StrategyConfig::edge_switching();
      c.cbar_rate_uses_c = spec.cbar_rate_uses_c;
      return c;
    }
  }
  throw InputError("unknown strategy");
}

/// Builds the seeker and checks the connectivity assumption of its strategy.
inline Seeker build_seeker(const RunConfig& cfg)
{
  GameModel game = build_game(cfg.game);
  StrategyConfig strategy = build_strategy(cfg.strategy, game.n_players());
  std::optional<Seeker> seeker;
  if (cfg.topology.graph)
    seeker.emplace(std::move(game), build_graph(*cfg.topology.graph), std::move(strategy));
  else
    seeker.emplace(std::move(game), build_schedule(cfg.topology), std::move(strategy));
  seeker->require_connected();
  return std::move(*seeker);
}

/// Draws x, then every y_ij, then the gains, from one PortableRng(seed).
/// Gain defaults: uniform in [-20, 20] for node_adaptive, 1 for the edge laws,
/// theta * theta_bar for fixed. Random edge gains c are drawn for i <= j and
/// mirrored so that c stays symmetric.
inline SeekerState make_initial_state(const Seeker& seeker, const InitSpec& init)
{
  const StateLayout& layout = seeker.layout();
  PortableRng rng(init.seed);
  SeekerState s = SeekerState::zeros(layout);
  for (Eigen::Index q = 0; q < s.x.size(); ++q) s.x(q) = rng.uniform(init.x.first, init.x.second);
  for (Eigen::Index q = 0; q < s.y.size(); ++q) s.y(q) = rng.uniform(init.y.first, init.y.second);

  const int n = layout.n;
  auto draw = [&](const std::variant<double, Range>& spec) {
    if (const double* v = std::get_if<double>(&spec)) return *v;
    const auto& r = std::get<Range>(spec);
    return rng.uniform(r.first, r.second);
  };
  switch (layout.kind) {
    case StrategyKind::Fixed: s.theta = *seeker.config().fixed_theta * seeker.config().theta_bar; break;
    case StrategyKind::NodeAdaptive: {
      const auto spec = init.gains.value_or(Range{-20.0, 20.0});
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s.theta(i, j) = draw(spec);
      break;
    }
    case StrategyKind::EdgeAdaptive:
    case StrategyKind::EdgeSwitching: {
      const auto spec = init.gains.value_or(1.0);
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) s.c(i, j) = s.c(j, i) = draw(spec);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s.cbar(i, j) = draw(spec);
      break;
    }
  }
  return s;
}

inline ActionProfile nash_point(const GameModel& game, double tol = 1e-10)
{
  return solve_nash(game, ActionProfile::Zero(game.profile_size()), tol);
}

struct RunResult {
  StateLayout layout;
  ActionProfile x_star;
  SimulationTrace trace;
  ConvergenceVerdict verdict;
};

/// Runs one trajectory. Throws DivergenceError / StiffnessError from the
/// integrator; convergence failure is reported in the verdict only.
inline RunResult simulate(const RunConfig& cfg, const Seeker& seeker, const ActionProfile& x_star)
{
  const SeekerState s0 = make_initial_state(seeker, cfg.init);
  seeker.check_state(s0);
  const Probe probe = make_probe(seeker, x_star);
  const auto bps = seeker.breakpoints();
  const Rhs rhs = std::cref(seeker);

  RunResult out;
  out.layout = seeker.layout();
  out.x_star = x_star;
  if (cfg.stop) {
    StopCriterion stop;
    stop.t_max = cfg.integrator.t_end;
    if (cfg.stop->pseudo_gradient_tol) stop.pseudo_gradient_tol = *cfg.stop->pseudo_gradient_tol;
    if (cfg.stop->consensus_tol) stop.consensus_tol = *cfg.stop->consensus_tol;
    if (cfg.stop->nash_error_tol) stop.nash_error_tol = *cfg.stop->nash_error_tol;
    out.trace = integrate_until(rhs, s0.flatten(), cfg.integrator, stop, probe, bps);
  } else {
    out.trace = integrate(rhs, s0.flatten(), cfg.integrator, bps, probe);
  }
  out.verdict = verdict(out.trace, out.layout, x_star, cfg.verdict.tol, cfg.verdict.gain_tol);
  return out;
}

inline RunResult simulate(const RunConfig& cfg)
{
  const Seeker seeker = build_seeker(cfg);
  return simulate(cfg, seeker, nash_point(seeker.game()));
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  std::string parameter;  // grid key, empty without a grid
  double value = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  bool converged = false;  // verdict action && consensus
  bool verdict_all = false;
  bool failed = false;  // divergence or stiffness
  std::string error;
  double final_action_error = std::numeric_limits<double>::quiet_NaN();
  double final_consensus_error = std::numeric_limits<double>::quiet_NaN();
  double max_gain = std::numeric_limits<double>::quiet_NaN();
  double final_time = 0.0;
};

struct SweepAggregate {
  std::string parameter;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::size_t runs = 0;
  std::size_t converged = 0;
  std::size_t failed = 0;
  double worst_action_error = 0.0;
  double worst_consensus_error = 0.0;
  double max_gain = -std::numeric_limits<double>::infinity();
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepAggregate> aggregates;
};

inline RunConfig apply_grid_value(RunConfig cfg, const std::string& key, double value)
{
  if (key == "gamma") cfg.strategy.gamma = MatrixParam{value};
  else if (key == "theta") cfg.strategy.theta = value;
  else if (key == "gain_init") cfg.init.gains = value;
  else throw InputError("unknown grid key '" + key + "'");
  return cfg;
}

/// Runs every (grid value, seed) pair. Rows come back in (grid, seed) order
/// whatever `jobs` is; each run owns its seeker and state.
inline SweepResult run_sweep(const RunConfig& base, int jobs_override = 0)
{
  const SweepSpec spec = base.sweep.value_or(SweepSpec{});
  const int jobs = std::max(1, jobs_override > 0 ? jobs_override : spec.jobs);

  std::vector<std::pair<std::string, double>> points;
  if (spec.grid.empty()) {
    points.emplace_back("", std::numeric_limits<double>::quiet_NaN());
  } else {
    for (const auto& [key, values] : spec.grid)
      for (double v : values) points.emplace_back(key, v);
  }

  struct Task {
    std::size_t point;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < points.size(); ++p)
    for (std::uint64_t seed : spec.seeds) tasks.push_back({p, seed});

  // x* does not depend on the swept parameters
  const ActionProfile x_star = nash_point(build_game(base.game));

  SweepResult result;
  result.rows.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      const auto& [key, value] = points[tasks[k].point];
      RunConfig cfg = key.empty() ? base : apply_grid_value(base, key, value);
      cfg.init.seed = tasks[k].seed;
      SweepRow row;
      row.parameter = key;
      row.value = value;
      row.seed = tasks[k].seed;
      try {
        const Seeker seeker = build_seeker(cfg);
        const RunResult r = simulate(cfg, seeker, x_star);
        row.converged = r.verdict.action.pass && r.verdict.consensus.pass;
        row.verdict_all = r.verdict.all();
        row.final_action_error = r.verdict.action.value;
        row.final_consensus_error = r.verdict.consensus.value;
        row.final_time = r.trace.final_time();
        double gmax = -std::numeric_limits<double>::infinity();
        for (const auto& d : r.trace.diagnostics) gmax = std::max(gmax, d.gain_max);
        row.max_gain = gmax;
      } catch (const DivergenceError& e) {
        row.failed = true;
        row.error = e.what();
      } catch (const StiffnessError& e) {
        row.failed = true;
        row.error = e.what();
      }
      result.rows[k] = std::move(row);
    }
  };
  if (jobs == 1 || tasks.size() < 2) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t p = 0; p < points.size() && !tasks.empty(); ++p) {
    SweepAggregate agg;
    agg.parameter = points[p].first;
    agg.value = points[p].second;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      if (tasks[k].point != p) continue;
      const SweepRow& row = result.rows[k];
      ++agg.runs;
      if (row.failed) {
        ++agg.failed;
        continue;
      }
      agg.converged += row.converged ? 1 : 0;
      agg.worst_action_error = std::max(agg.worst_action_error, row.final_action_error);
      agg.worst_consensus_error = std::max(agg.worst_consensus_error, row.final_consensus_error);
      agg.max_gain = std::max(agg.max_gain, row.max_gain);
    }
    result.aggregates.push_back(agg);
  }
  return result;
}

}  // namespace nashseek
