#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "nashseek/errors.hpp"
#include "nashseek/game.hpp"
#include "nashseek/graph.hpp"
#include "nashseek/state.hpp"

namespace nashseek {

/// Parameters of one seeking strategy. Only the fields belonging to `kind`
/// may be set.
struct StrategyConfig {
  StrategyKind kind = StrategyKind::NodeAdaptive;
  std::optional<double> fixed_theta;  // Fixed: global gain theta > 0
  Eigen::MatrixXd theta_bar;          // Fixed: per-pair weights, N x N, > 0
  Eigen::MatrixXd gamma;              // NodeAdaptive: adaptation rates, N x N, > 0
  // Edge strategies: grow cbar_ij at rate c_ij*|y_ij - x_j|^2 instead of
  // a_ij*|y_ij - x_j|^2. Off by default.
  bool cbar_rate_uses_c = false;

  static StrategyConfig fixed(double theta, Eigen::MatrixXd theta_bar)
  {
    StrategyConfig c;
    c.kind = StrategyKind::Fixed;
    c.fixed_theta = theta;
    c.theta_bar = std::move(theta_bar);
    return c;
  }
  static StrategyConfig node_adaptive(Eigen::MatrixXd gamma)
  {
    StrategyConfig c;
    c.kind = StrategyKind::NodeAdaptive;
    c.gamma = std::move(gamma);
    return c;
  }
  static StrategyConfig edge_adaptive()
  {
    StrategyConfig c;
    c.kind = StrategyKind::EdgeAdaptive;
    return c;
  }
  static StrategyConfig edge_switching()
  {
    StrategyConfig c;
    c.kind = StrategyKind::EdgeSwitching;
    return c;
  }

  void validate(int n) const
  {
    const bool fixed = kind == StrategyKind::Fixed;
    const bool node = kind == StrategyKind::NodeAdaptive;
    if (fixed != fixed_theta.has_value()) throw InputError("fixed_theta is set exactly for the fixed strategy");
    if (fixed != (theta_bar.size() > 0)) throw InputError("theta_bar is set exactly for the fixed strategy");
    if (node != (gamma.size() > 0)) throw InputError("gamma is set exactly for the node_adaptive strategy");
    if (cbar_rate_uses_c && !is_edge_strategy(kind)) throw InputError("cbar_rate_uses_c applies to edge strategies only");
    if (fixed) {
      if (!(*fixed_theta > 0.0)) throw InputError("fixed_theta must be positive");
      if (theta_bar.rows() != n || theta_bar.cols() != n) throw InputError("theta_bar must be N x N");
      if (!(theta_bar.array() > 0.0).all()) throw InputError("theta_bar entries must be positive");
    }
    if (node) {
      if (gamma.rows() != n || gamma.cols() != n) throw InputError("gamma must be N x N");
      if (!(gamma.array() > 0.0).all()) throw InputError("gamma entries must be positive");
    }
  }
};

/// Right-hand side of the seeking ODE for one game, topology and strategy.
/// Pure in (t, state): time only selects the active graph of a schedule.
class Seeker {
public:
  Seeker(GameModel game, CommGraph graph, StrategyConfig cfg)
      : Seeker(std::move(game), as_topology(std::move(graph), cfg.kind), std::move(cfg))
  {}

  Seeker(GameModel game, SwitchingSchedule schedule, StrategyConfig cfg)
      : Seeker(std::move(game), Topology(std::move(schedule)), std::move(cfg))
  {}

  const GameModel& game() const noexcept { return game_; }
  const StrategyConfig& config() const noexcept { return cfg_; }
  const StateLayout& layout() const noexcept { return layout_; }
  bool switching() const noexcept { return std::holds_alternative<SwitchingSchedule>(topology_); }

  const CommGraph& graph_at(double t) const
  {
    if (const auto* g = std::get_if<CommGraph>(&topology_)) return *g;
    return std::get<SwitchingSchedule>(topology_).graph_at(t);
  }

  const SwitchingSchedule* schedule() const { return std::get_if<SwitchingSchedule>(&topology_); }

  /// Switching instants at which the right-hand side is discontinuous.
  std::vector<double> breakpoints() const
  {
    if (const auto* s = schedule()) return s->breakpoints();
    return {};
  }

  /// Throws AssumptionViolation when a graph the strategy can use is
  /// disconnected.
  void require_connected() const
  {
    if (const auto* g = std::get_if<CommGraph>(&topology_)) {
      if (!is_connected(*g))
        throw AssumptionViolation("communication graph is disconnected (connected undirected graph required)");
    } else {
      const auto& s = std::get<SwitchingSchedule>(topology_);
      for (std::size_t k = 0; k < s.graphs().size(); ++k)
        if (!is_connected(s.graphs()[k]))
          throw AssumptionViolation("scheduled graph " + std::to_string(k + 1) +
                                    " is disconnected (every scheduled graph must be connected)");
    }
  }

  /// Edge strategies need c_ij(0) = c_ji(0).
  void check_state(const SeekerState& s) const
  {
    if (!(s.layout == layout_)) throw InputError("state layout does not match the seeker");
    if (s.x.size() != static_cast<Eigen::Index>(layout_.x_size()) ||
        s.y.size() != static_cast<Eigen::Index>(layout_.y_size()))
      throw InputError("state dimensions do not match the game");
    if (is_edge_strategy(layout_.kind)) {
      if (s.c.rows() != layout_.n || s.c.cols() != layout_.n || s.cbar.rows() != layout_.n || s.cbar.cols() != layout_.n)
        throw InputError("edge gains must be N x N");
      if (s.c != s.c.transpose()) throw InputError("edge gains c must be symmetric (c_ij = c_ji)");
    } else if (s.theta.rows() != layout_.n || s.theta.cols() != layout_.n) {
      throw InputError("theta must be N x N");
    }
  }

  void operator()(double t, std::span<const double> s, std::span<double> ds) const
  {
    if (s.size() != layout_.size() || ds.size() != layout_.size())
      throw InputError("flat state length does not match the seeker layout");
    const Eigen::MatrixXd& a = graph_at(t).adjacency();
    action_rhs(s, ds);
    switch (layout_.kind) {
      case StrategyKind::Fixed:
      case StrategyKind::NodeAdaptive: node_rhs(a, s, ds); break;
      case StrategyKind::EdgeAdaptive:
      case StrategyKind::EdgeSwitching: edge_rhs(a, s, ds); break;
    }
  }

  SeekerState derivative(double t, const SeekerState& s) const
  {
    check_state(s);
    const Eigen::VectorXd flat = s.flatten();
    Eigen::VectorXd out(flat.size());
    (*this)(t, as_span(flat), as_span(out));
    return SeekerState::unflatten(layout_, out);
  }

private:
  using Topology = std::variant<CommGraph, SwitchingSchedule>;

  static Topology as_topology(CommGraph g, StrategyKind kind)
  {
    if (kind == StrategyKind::EdgeSwitching) return SwitchingSchedule::single(std::move(g));
    return g;
  }

  Seeker(GameModel game, Topology topology, StrategyConfig cfg)
      : game_(std::move(game)), topology_(std::move(topology)), cfg_(std::move(cfg))
  {
    const int n = game_.n_players();
    if (n < 2) throw InputError("seeking dynamics need at least two players");
    cfg_.validate(n);
    if (switching() != (cfg_.kind == StrategyKind::EdgeSwitching))
      throw InputError("a switching schedule is used exactly with the edge_switching strategy");
    const int gn = switching() ? std::get<SwitchingSchedule>(topology_).vertex_count()
                               : std::get<CommGraph>(topology_).size();
    if (gn != n) throw InputError("graph has " + std::to_string(gn) + " vertices but the game has " + std::to_string(n) + " players");
    layout_ = StateLayout{n, game_.action_dim(), cfg_.kind};
  }

  // x_i' = -grad_i f_i(y_i), with y_i the player's own estimate vector.
  void action_rhs(std::span<const double> s, std::span<double> ds) const
  {
    const int n = layout_.n;
    const int d = layout_.d;
    for (int i = 0; i < n; ++i) {
      const auto yi = s.subspan(layout_.y_offset(i), static_cast<std::size_t>(n * d));
      auto out = ds.subspan(layout_.x_index(i, 0), static_cast<std::size_t>(d));
      game_.partial_gradient(i, yi, out);
      for (double& v : out) v = -v;
    }
  }

  // y_ij' = -theta_ij * D_ij,  theta_ij' = gamma_ij * |D_ij|^2 (node) or 0 (fixed),
  // D_ij = sum_k a_ik (y_ij - y_kj) + a_ij (y_ij - x_j).
  void node_rhs(const Eigen::MatrixXd& a, std::span<const double> s, std::span<double> ds) const
  {
    const int n = layout_.n;
    const int d = layout_.d;
    const bool adaptive = layout_.kind == StrategyKind::NodeAdaptive;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double theta = adaptive ? s[layout_.theta_index(i, j)] : *cfg_.fixed_theta * cfg_.theta_bar(i, j);
        double sq = 0.0;
        for (int c = 0; c < d; ++c) {
          const double yij = s[layout_.y_index(i, j, c)];
          double dis = a(i, j) * (yij - s[layout_.x_index(j, c)]);
          for (int k = 0; k < n; ++k)
            if (a(i, k) != 0.0) dis += a(i, k) * (yij - s[layout_.y_index(k, j, c)]);
          ds[layout_.y_index(i, j, c)] = -theta * dis;
          sq += dis * dis;
        }
        ds[layout_.theta_index(i, j)] = adaptive ? cfg_.gamma(i, j) * sq : 0.0;
      }
    }
  }

  // y_ij'  = -(sum_k a_ik c_ik (y_ij - y_kj) + a_ij cbar_ij (y_ij - x_j))
  // c_ij'  = a_ij |y_i - y_j|^2
  // cbar_ij' = a_ij |y_ij - x_j|^2   (c_ij |y_ij - x_j|^2 with cbar_rate_uses_c)
  void edge_rhs(const Eigen::MatrixXd& a, std::span<const double> s, std::span<double> ds) const
  {
    const int n = layout_.n;
    const int d = layout_.d;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double cbar = s[layout_.cbar_index(i, j)];
        double sq = 0.0;
        for (int c = 0; c < d; ++c) {
          const double yij = s[layout_.y_index(i, j, c)];
          const double anchor = yij - s[layout_.x_index(j, c)];
          double dis = a(i, j) * cbar * anchor;
          for (int k = 0; k < n; ++k)
            if (a(i, k) != 0.0) dis += a(i, k) * s[layout_.c_index(i, k)] * (yij - s[layout_.y_index(k, j, c)]);
          ds[layout_.y_index(i, j, c)] = -dis;
          sq += anchor * anchor;
        }
        const double rate = cfg_.cbar_rate_uses_c ? s[layout_.c_index(i, j)] : a(i, j);
        ds[layout_.cbar_index(i, j)] = rate * sq;
      }
    }
    for (int i = 0; i < n; ++i) {
      ds[layout_.c_index(i, i)] = 0.0;
      for (int j = i + 1; j < n; ++j) {
        double sq = 0.0;
        if (a(i, j) != 0.0) {
          const std::size_t oi = layout_.y_offset(i);
          const std::size_t oj = layout_.y_offset(j);
          for (std::size_t q = 0; q < static_cast<std::size_t>(n * d); ++q) {
            const double diff = s[oi + q] - s[oj + q];
            sq += diff * diff;
          }
          sq *= a(i, j);
        }
        ds[layout_.c_index(i, j)] = sq;
        ds[layout_.c_index(j, i)] = sq;
      }
    }
  }

  GameModel game_;
  Topology topology_;
  StrategyConfig cfg_;
  StateLayout layout_;
};

// Single-evaluation entry points. Each builds the seeker for one call, so
// they are meant for inspection and tests; integration goes through Seeker.

inline SeekerState rhs_fixed(const GameModel& game, const CommGraph& g, const StrategyConfig& cfg, const SeekerState& s)
{
  if (cfg.kind != StrategyKind::Fixed) throw InputError("rhs_fixed needs a fixed strategy config");
  return Seeker(game, g, cfg).derivative(0.0, s);
}

inline SeekerState rhs_node_adaptive(const GameModel& game, const CommGraph& g, const StrategyConfig& cfg,
                                     const SeekerState& s)
{
  if (cfg.kind != StrategyKind::NodeAdaptive) throw InputError("rhs_node_adaptive needs a node_adaptive config");
  return Seeker(game, g, cfg).derivative(0.0, s);
}

inline SeekerState rhs_edge_adaptive(const GameModel& game, const CommGraph& g, const StrategyConfig& cfg,
                                     const SeekerState& s)
{
  if (cfg.kind != StrategyKind::EdgeAdaptive) throw InputError("rhs_edge_adaptive needs an edge_adaptive config");
  return Seeker(game, g, cfg).derivative(0.0, s);
}

inline SeekerState rhs_edge_switching(const GameModel& game, const SwitchingSchedule& sched, const StrategyConfig& cfg,
                                      const SeekerState& s, double t)
{
  if (cfg.kind != StrategyKind::EdgeSwitching) throw InputError("rhs_edge_switching needs an edge_switching config");
  return Seeker(game, sched, cfg).derivative(t, s);
}

}  // namespace nashseek
