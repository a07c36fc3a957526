#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "nashseek/errors.hpp"

namespace nashseek {

enum class StrategyKind { Fixed, NodeAdaptive, EdgeAdaptive, EdgeSwitching };

inline std::string_view to_string(StrategyKind k)
{
  switch (k) {
    case StrategyKind::Fixed: return "fixed";
    case StrategyKind::NodeAdaptive: return "node_adaptive";
    case StrategyKind::EdgeAdaptive: return "edge_adaptive";
    case StrategyKind::EdgeSwitching: return "edge_switching";
  }
  return "?";
}

inline StrategyKind strategy_from_string(std::string_view s)
{
  if (s == "fixed") return StrategyKind::Fixed;
  if (s == "node_adaptive") return StrategyKind::NodeAdaptive;
  if (s == "edge_adaptive") return StrategyKind::EdgeAdaptive;
  if (s == "edge_switching") return StrategyKind::EdgeSwitching;
  throw InputError("unknown strategy '" + std::string(s) + "'");
}

inline bool is_edge_strategy(StrategyKind k) { return k == StrategyKind::EdgeAdaptive || k == StrategyKind::EdgeSwitching; }

/// Flat state layout:
///
///   [ x (N*d) | y (N*N*d), pair (i,j) at ((i*N + j)*d) | gains ]
///
/// Gains are theta_ij at i*N + j for Fixed and NodeAdaptive, and c_ij then
/// cbar_ij (each N*N, row-major) for the edge strategies.
struct StateLayout {
  int n = 0;
  int d = 0;
  StrategyKind kind = StrategyKind::NodeAdaptive;

  std::size_t x_size() const { return static_cast<std::size_t>(n * d); }
  std::size_t y_size() const { return static_cast<std::size_t>(n * n * d); }
  std::size_t gain_size() const { return static_cast<std::size_t>((is_edge_strategy(kind) ? 2 : 1) * n * n); }
  std::size_t size() const { return x_size() + y_size() + gain_size(); }

  std::size_t x_index(int i, int k) const { return static_cast<std::size_t>(i * d + k); }
  std::size_t y_index(int i, int j, int k) const { return x_size() + static_cast<std::size_t>((i * n + j) * d + k); }
  std::size_t y_offset(int i) const { return x_size() + static_cast<std::size_t>(i * n * d); }
  std::size_t gain_offset() const { return x_size() + y_size(); }
  std::size_t theta_index(int i, int j) const { return gain_offset() + static_cast<std::size_t>(i * n + j); }
  std::size_t c_index(int i, int j) const { return theta_index(i, j); }
  std::size_t cbar_index(int i, int j) const { return gain_offset() + static_cast<std::size_t>(n * n + i * n + j); }

  bool operator==(const StateLayout&) const = default;
};

/// Structured view of one seeker state. Converts to and from the flat vector
/// the integrator works on.
struct SeekerState {
  StateLayout layout;
  Eigen::VectorXd x;      // N*d
  Eigen::VectorXd y;      // N*N*d, pair (i,j) at (i*N + j)*d
  Eigen::MatrixXd theta;  // N x N (Fixed, NodeAdaptive)
  Eigen::MatrixXd c;      // N x N (edge strategies)
  Eigen::MatrixXd cbar;   // N x N (edge strategies)

  static SeekerState zeros(const StateLayout& layout)
  {
    SeekerState s;
    s.layout = layout;
    s.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.x_size()));
    s.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.y_size()));
    if (is_edge_strategy(layout.kind)) {
      s.c = Eigen::MatrixXd::Zero(layout.n, layout.n);
      s.cbar = Eigen::MatrixXd::Zero(layout.n, layout.n);
    } else {
      s.theta = Eigen::MatrixXd::Zero(layout.n, layout.n);
    }
    return s;
  }

  /// Player i's estimate vector y_i = [y_i1, ..., y_iN].
  auto estimates_of(int i) const { return y.segment(static_cast<Eigen::Index>(i) * layout.n * layout.d, layout.n * layout.d); }
  auto estimate(int i, int j) const { return y.segment(static_cast<Eigen::Index>(i * layout.n + j) * layout.d, layout.d); }
  auto estimate(int i, int j) { return y.segment(static_cast<Eigen::Index>(i * layout.n + j) * layout.d, layout.d); }
  auto action(int i) const { return x.segment(static_cast<Eigen::Index>(i) * layout.d, layout.d); }

  Eigen::VectorXd flatten() const
  {
    Eigen::VectorXd out(static_cast<Eigen::Index>(layout.size()));
    out.head(x.size()) = x;
    out.segment(x.size(), y.size()) = y;
    const Eigen::Index g = static_cast<Eigen::Index>(layout.gain_offset());
    const Eigen::Index nn = layout.n * layout.n;
    if (is_edge_strategy(layout.kind)) {
      out.segment(g, nn) = c.transpose().reshaped();
      out.segment(g + nn, nn) = cbar.transpose().reshaped();
    } else {
      out.segment(g, nn) = theta.transpose().reshaped();
    }
    return out;
  }

  static SeekerState unflatten(const StateLayout& layout, const Eigen::VectorXd& flat)
  {
    if (flat.size() != static_cast<Eigen::Index>(layout.size()))
      throw InputError("flat state has length " + std::to_string(flat.size()) + ", layout expects " +
                       std::to_string(layout.size()));
    SeekerState s;
    s.layout = layout;
    s.x = flat.head(static_cast<Eigen::Index>(layout.x_size()));
    s.y = flat.segment(static_cast<Eigen::Index>(layout.x_size()), static_cast<Eigen::Index>(layout.y_size()));
    const Eigen::Index g = static_cast<Eigen::Index>(layout.gain_offset());
    const Eigen::Index nn = layout.n * layout.n;
    if (is_edge_strategy(layout.kind)) {
      s.c = flat.segment(g, nn).reshaped(layout.n, layout.n).transpose();
      s.cbar = flat.segment(g + nn, nn).reshaped(layout.n, layout.n).transpose();
    } else {
      s.theta = flat.segment(g, nn).reshaped(layout.n, layout.n).transpose();
    }
    return s;
  }
};

/// e_ij = y_ij - x_j stacked in (i, j) order, and its Euclidean norm.
struct ConsensusError {
  Eigen::VectorXd e;
  double norm = 0.0;
};

inline ConsensusError consensus_error(const SeekerState& s)
{
  const int n = s.layout.n;
  const int d = s.layout.d;
  ConsensusError out;
  out.e.resize(static_cast<Eigen::Index>(n) * n * d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.e.segment(static_cast<Eigen::Index>(i * n + j) * d, d) = s.estimate(i, j) - s.action(j);
  out.norm = out.e.norm();
  return out;
}

/// Consensus-error norm straight from a flat state.
inline double consensus_error_norm(const StateLayout& layout, const Eigen::VectorXd& flat)
{
  double acc = 0.0;
  for (int i = 0; i < layout.n; ++i)
    for (int j = 0; j < layout.n; ++j)
      for (int k = 0; k < layout.d; ++k) {
        const double e = flat(static_cast<Eigen::Index>(layout.y_index(i, j, k))) -
                         flat(static_cast<Eigen::Index>(layout.x_index(j, k)));
        acc += e * e;
      }
  return std::sqrt(acc);
}

}  // namespace nashseek
