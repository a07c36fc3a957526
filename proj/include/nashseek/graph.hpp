#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nashseek/errors.hpp"
#include "nashseek/linalg.hpp"

namespace nashseek {

/// Undirected, unweighted communication graph without self-loops.
class CommGraph {
public:
  CommGraph() = default;

  explicit CommGraph(Eigen::MatrixXd adjacency) : adj_(std::move(adjacency))
  {
    if (adj_.rows() != adj_.cols() || adj_.rows() < 1) throw InputError("adjacency must be square and non-empty");
    const Eigen::Index n = adj_.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (adj_(i, i) != 0.0) throw InputError("graph contains a self-loop at vertex " + std::to_string(i + 1));
      for (Eigen::Index j = 0; j < n; ++j) {
        const double a = adj_(i, j);
        if (a != 0.0 && a != 1.0) throw InputError("adjacency entries must be 0 or 1");
        if (a != adj_(j, i)) throw InputError("adjacency must be symmetric (undirected graph)");
      }
    }
  }

  /// Builds a graph from 1-based vertex pairs.
  static CommGraph from_edges(int n, const std::vector<std::pair<int, int>>& edges)
  {
    if (n < 1) throw InputError("graph needs at least one vertex");
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [u, v] : edges) {
      if (u < 1 || v < 1 || u > n || v > n)
        throw InputError("edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range 1.." +
                         std::to_string(n));
      if (u == v) throw InputError("self-loop edge at vertex " + std::to_string(u));
      a(u - 1, v - 1) = 1.0;
      a(v - 1, u - 1) = 1.0;
    }
    return CommGraph(std::move(a));
  }

  static CommGraph ring(int n)
  {
    std::vector<std::pair<int, int>> e;
    for (int i = 1; i <= n; ++i) e.emplace_back(i, i % n + 1);
    if (n == 2) e.resize(1);
    return from_edges(n, n >= 2 ? e : std::vector<std::pair<int, int>>{});
  }

  static CommGraph path(int n)
  {
    std::vector<std::pair<int, int>> e;
    for (int i = 1; i < n; ++i) e.emplace_back(i, i + 1);
    return from_edges(n, e);
  }

  static CommGraph complete(int n)
  {
    std::vector<std::pair<int, int>> e;
    for (int i = 1; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j) e.emplace_back(i, j);
    return from_edges(n, e);
  }

  int size() const noexcept { return static_cast<int>(adj_.rows()); }
  const Eigen::MatrixXd& adjacency() const noexcept { return adj_; }
  double a(int i, int j) const { return adj_(i, j); }

  /// 1-based (u, v) pairs with u < v.
  std::vector<std::pair<int, int>> edges() const
  {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < size(); ++i)
      for (int j = i + 1; j < size(); ++j)
        if (adj_(i, j) != 0.0) out.emplace_back(i + 1, j + 1);
    return out;
  }

  bool operator==(const CommGraph& other) const { return adj_ == other.adj_; }

private:
  Eigen::MatrixXd adj_;
};

/// L = D - A.
inline Eigen::MatrixXd laplacian(const CommGraph& g)
{
  const Eigen::MatrixXd& a = g.adjacency();
  Eigen::MatrixXd l = -a;
  l.diagonal() = a.rowwise().sum();
  return l;
}

inline constexpr double kConnectivityThreshold = 1e-9;

/// Second-smallest Laplacian eigenvalue (0 for a single vertex).
inline double algebraic_connectivity(const CommGraph& g)
{
  if (g.size() < 2) return 0.0;
  return linalg::symmetric_eigenvalues(laplacian(g))(1);
}

inline bool is_connected(const CommGraph& g)
{
  return g.size() == 1 || algebraic_connectivity(g) > kConnectivityThreshold;
}

/// M = L (x) I_N + diag(a_11, a_12, ..., a_NN). Rows and columns are indexed
/// by the ordered pair (i, j) as i*N + j.
inline Eigen::MatrixXd augmented_m_matrix(const CommGraph& g)
{
  const int n = g.size();
  const Eigen::MatrixXd l = laplacian(g);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      if (l(i, k) != 0.0) m.block(i * n, k * n, n, n).diagonal().setConstant(l(i, k));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i * n + j, i * n + j) += g.a(i, j);
  return m;
}

/// Piecewise-constant graph selection. Segment k covers [start_k, start_{k+1})
/// and the last segment extends to infinity.
class SwitchingSchedule {
public:
  struct Segment {
    double start;
    std::size_t graph;
    bool operator==(const Segment&) const = default;
  };

  SwitchingSchedule(std::vector<CommGraph> graphs, std::vector<Segment> segments, double min_dwell)
      : graphs_(std::move(graphs)), segments_(std::move(segments)), min_dwell_(min_dwell)
  {
    if (graphs_.empty()) throw InputError("schedule needs at least one graph");
    if (segments_.empty()) throw InputError("schedule needs at least one segment");
    if (!(min_dwell_ > 0.0)) throw InputError("min_dwell must be positive");
    for (const auto& g : graphs_)
      if (g.size() != graphs_.front().size()) throw InputError("all scheduled graphs must have the same vertex count");
    if (segments_.front().start != 0.0) throw InputError("schedule must start at t = 0");
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      if (segments_[k].graph >= graphs_.size()) throw InputError("schedule references an unknown graph index");
      if (k > 0) {
        const double gap = segments_[k].start - segments_[k - 1].start;
        if (!(gap > 0.0)) throw InputError("schedule switching times must be strictly increasing");
        if (gap < min_dwell_)
          throw InputError("dwell time " + std::to_string(gap) + " before t = " +
                           std::to_string(segments_[k].start) + " is below min_dwell " + std::to_string(min_dwell_));
      }
    }
  }

  static SwitchingSchedule single(CommGraph g)
  {
    return SwitchingSchedule({std::move(g)}, {{0.0, 0}}, std::numeric_limits<double>::max());
  }

  std::size_t index_at(double t) const
  {
    if (t < 0.0 || std::isnan(t)) throw InputError("schedule queried at negative time");
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double v, const Segment& s) { return v < s.start; });
    return std::prev(it)->graph;
  }

  const CommGraph& graph_at(double t) const { return graphs_[index_at(t)]; }

  /// Switching instants t_1, t_2, ... (t_0 = 0 excluded).
  std::vector<double> breakpoints() const
  {
    std::vector<double> out;
    for (std::size_t k = 1; k < segments_.size(); ++k) out.push_back(segments_[k].start);
    return out;
  }

  const std::vector<CommGraph>& graphs() const noexcept { return graphs_; }
  const std::vector<Segment>& segments() const noexcept { return segments_; }
  double min_dwell() const noexcept { return min_dwell_; }
  int vertex_count() const { return graphs_.front().size(); }

  bool all_connected() const
  {
    return std::all_of(graphs_.begin(), graphs_.end(), [](const CommGraph& g) { return is_connected(g); });
  }

private:
  std::vector<CommGraph> graphs_;
  std::vector<Segment> segments_;
  double min_dwell_;
};

inline const CommGraph& graph_at(const SwitchingSchedule& s, double t) { return s.graph_at(t); }

/// Smallest eigenvalue of M over every graph the schedule can select.
inline double min_lambda_over_schedule(const SwitchingSchedule& s)
{
  double out = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.graphs().size(); ++k) {
    const CommGraph& g = s.graphs()[k];
    if (!is_connected(g))
      throw AssumptionViolation("scheduled graph " + std::to_string(k + 1) + " is disconnected");
    out = std::min(out, linalg::min_eigenvalue(augmented_m_matrix(g)));
  }
  return out;
}

/// The two graphs used for the switching demonstration: a 5-cycle and the
/// path 1-2-3-4-5 with the chord (1,3).
inline CommGraph demo_graph_a() { return CommGraph::ring(5); }
inline CommGraph demo_graph_b() { return CommGraph::from_edges(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {1, 3}}); }

/// Graph A on [0, 0.5) and [5, 8); graph B otherwise.
inline SwitchingSchedule demo_switching_schedule()
{
  return SwitchingSchedule({demo_graph_a(), demo_graph_b()}, {{0.0, 0}, {0.5, 1}, {5.0, 0}, {8.0, 1}}, 0.5);
}

}  // namespace nashseek
