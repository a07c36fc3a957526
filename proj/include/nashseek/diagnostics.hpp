#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "nashseek/dynamics.hpp"
#include "nashseek/errors.hpp"
#include "nashseek/game.hpp"
#include "nashseek/graph.hpp"
#include "nashseek/integrator.hpp"
#include "nashseek/linalg.hpp"
#include "nashseek/state.hpp"

namespace nashseek {

/// Sufficient gain levels under which the Lyapunov functions of the three
/// adaptive laws are strictly decreasing. m and l_i usually come from
/// sampling, so every bound here is an estimate.
struct TheoryBounds {
  int n_players = 0;
  double max_l = 0.0;
  double m = 0.0;
  double lambda_min_M = 0.0;
  double lambda_min_MM = 0.0;
  double norm_M = 0.0;
  double lambda_switch = 0.0;  // smallest lambda_min(M) over the usable graphs
  double lbar1 = 0.0;          // 2 |M| sqrt(N) max_l
  double lbar2 = 0.0;          // 2 |M| N max_l
  double theta_star_bound = 0.0;
  double c_star_bound = 0.0;
  double c_star_switch_bound = 0.0;
};

namespace detail {

struct SpectralData {
  double lambda_min_M;
  double lambda_min_MM;
  double norm_M;
};

inline SpectralData spectral_data(const CommGraph& g)
{
  if (!is_connected(g)) throw AssumptionViolation("theory bounds need a connected graph");
  const Eigen::MatrixXd m = augmented_m_matrix(g);
  SpectralData out{linalg::min_eigenvalue(m), linalg::min_eigenvalue(m * m), linalg::spectral_norm(m)};
  const double sq = out.lambda_min_M * out.lambda_min_M;
  if (std::abs(out.lambda_min_MM - sq) > 1e-9 * std::max(1.0, sq))
    throw std::logic_error("lambda_min(M M) differs from lambda_min(M)^2");
  return out;
}

inline TheoryBounds evaluate_bounds(const AssumptionReport& report, int n, const SpectralData& sd, double lambda_switch)
{
  const double m = report.monotonicity_modulus;
  if (!(m > 0.0))
    throw AssumptionViolation("strong monotonicity estimate m = " + std::to_string(m) + " is not positive");
  TheoryBounds b;
  b.n_players = n;
  b.max_l = report.max_lipschitz();
  b.m = m;
  b.lambda_min_M = sd.lambda_min_M;
  b.lambda_min_MM = sd.lambda_min_MM;
  b.norm_M = sd.norm_M;
  b.lambda_switch = lambda_switch;
  const double rn = std::sqrt(static_cast<double>(n));
  b.lbar1 = 2.0 * b.norm_M * rn * b.max_l;
  b.lbar2 = 2.0 * b.norm_M * n * b.max_l;
  b.theta_star_bound = ((b.lbar2 + b.max_l) * (b.lbar2 + b.max_l) + 4.0 * m * b.lbar1) / (8.0 * m * b.lambda_min_MM);
  const double coupled = b.max_l * (1.0 + rn);
  b.c_star_bound = coupled * coupled / (4.0 * m * b.lambda_min_M) + b.max_l / b.lambda_min_M;
  b.c_star_switch_bound = coupled * coupled / (4.0 * m * lambda_switch) + b.max_l / lambda_switch;
  return b;
}

}  // namespace detail

inline TheoryBounds theory_bounds(const AssumptionReport& report, const CommGraph& g)
{
  const auto sd = detail::spectral_data(g);
  return detail::evaluate_bounds(report, g.size(), sd, sd.lambda_min_M);
}

/// Spectral data is taken at its worst over the scheduled graphs (smallest
/// lambda_min, largest norm).
inline TheoryBounds theory_bounds(const AssumptionReport& report, const SwitchingSchedule& s)
{
  detail::SpectralData worst{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& g : s.graphs()) {
    const auto sd = detail::spectral_data(g);
    worst.lambda_min_M = std::min(worst.lambda_min_M, sd.lambda_min_M);
    worst.lambda_min_MM = std::min(worst.lambda_min_MM, sd.lambda_min_MM);
    worst.norm_M = std::max(worst.norm_M, sd.norm_M);
  }
  return detail::evaluate_bounds(report, s.vertex_count(), worst, min_lambda_over_schedule(s));
}

/// V = e^T (M (x) I_d) e + 1/2 |x - x*|^2 + sum_ij (theta_ij - theta*_ij)^2 / gamma_ij
inline double lyapunov_node(const CommGraph& g, const SeekerState& s, const ActionProfile& x_star,
                            const Eigen::MatrixXd& theta_star, const Eigen::MatrixXd& gamma)
{
  const int n = s.layout.n;
  const int d = s.layout.d;
  if (g.size() != n || x_star.size() != s.x.size() || theta_star.rows() != n || theta_star.cols() != n ||
      gamma.rows() != n || gamma.cols() != n || s.theta.rows() != n)
    throw InputError("lyapunov_node: dimension mismatch");
  const ConsensusError ce = consensus_error(s);
  const Eigen::MatrixXd m = augmented_m_matrix(g);
  const Eigen::Map<const Eigen::MatrixXd> e(ce.e.data(), d, n * n);  // column p = e_p
  const double v1 = (e * m * e.transpose()).trace();
  const double v2 = 0.5 * (s.x - x_star).squaredNorm();
  const double v3 = ((s.theta - theta_star).array().square() / gamma.array()).sum();
  return v1 + v2 + v3;
}

/// V = 1/2 |x - x*|^2 + 1/2 |e|^2 + sum_{i != j} (c_ij - c*)^2 / 4 + sum_{i != j} (cbar_ij - c*)^2 / 2
inline double lyapunov_edge(const SeekerState& s, const ActionProfile& x_star, double c_star)
{
  const int n = s.layout.n;
  if (x_star.size() != s.x.size() || s.c.rows() != n || s.cbar.rows() != n)
    throw InputError("lyapunov_edge: dimension mismatch");
  const double v1 = 0.5 * (s.x - x_star).squaredNorm();
  const double v2 = 0.5 * consensus_error(s).e.squaredNorm();
  double v3 = 0.0;
  double v4 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      v3 += (s.c(i, j) - c_star) * (s.c(i, j) - c_star) / 4.0;
      v4 += (s.cbar(i, j) - c_star) * (s.cbar(i, j) - c_star) / 2.0;
    }
  return v1 + v2 + v3 + v4;
}

/// Largest relative increase (V_{k+1} - V_k) / V_k over consecutive samples;
/// non-positive when V never increases.
inline double max_relative_ascent(const std::vector<double>& values)
{
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < values.size(); ++k) {
    const double base = std::max(std::abs(values[k - 1]), std::numeric_limits<double>::min());
    worst = std::max(worst, (values[k] - values[k - 1]) / base);
  }
  return values.size() < 2 ? 0.0 : worst;
}

// ---------------------------------------------------------------------------
// Verdicts

struct VerdictCheck {
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
};

/// Trajectory-wise evidence for the convergence claims. `gains_settled` is a
/// heuristic: the spread of every gain over the last 10% of samples.
struct ConvergenceVerdict {
  VerdictCheck action;          // final |x - x*| <= tol
  VerdictCheck consensus;       // final |y - 1 (x) x| <= tol
  VerdictCheck gains_monotone;  // largest decrease between samples (0 when monotone)
  VerdictCheck gains_settled;   // largest last-decile range <= tol_gain
  double final_time = 0.0;
  std::size_t samples = 0;

  bool all() const { return action.pass && consensus.pass && gains_monotone.pass && gains_settled.pass; }
};

inline ConvergenceVerdict verdict(const SimulationTrace& trace, const StateLayout& layout, const ActionProfile& x_star,
                                  double tol, double tol_gain)
{
  if (trace.empty()) throw InputError("verdict needs a non-empty trace");
  ConvergenceVerdict v;
  v.samples = trace.times.size();
  v.final_time = trace.final_time();

  const Eigen::VectorXd& last = trace.final_state();
  const double action_err = (last.head(static_cast<Eigen::Index>(layout.x_size())) - x_star).norm();
  const double cons_err = consensus_error_norm(layout, last);
  v.action = {action_err <= tol, action_err, tol};
  v.consensus = {cons_err <= tol, cons_err, tol};

  const auto g0 = static_cast<Eigen::Index>(layout.gain_offset());
  const auto ng = static_cast<Eigen::Index>(layout.gain_size());
  double worst_drop = 0.0;
  bool monotone = true;
  for (std::size_t k = 1; k < trace.states.size(); ++k) {
    const auto prev = trace.states[k - 1].segment(g0, ng);
    const auto cur = trace.states[k].segment(g0, ng);
    for (Eigen::Index q = 0; q < ng; ++q) {
      const double drop = prev(q) - cur(q);
      worst_drop = std::max(worst_drop, drop);
      if (drop > 1e-12 * std::max(1.0, std::abs(prev(q)))) monotone = false;
    }
  }
  v.gains_monotone = {monotone, worst_drop, 0.0};

  const std::size_t n = trace.states.size();
  const std::size_t first = static_cast<std::size_t>(std::floor(0.9 * static_cast<double>(n - 1)));
  double worst_range = 0.0;
  for (Eigen::Index q = 0; q < ng; ++q) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = first; k < n; ++k) {
      lo = std::min(lo, trace.states[k](g0 + q));
      hi = std::max(hi, trace.states[k](g0 + q));
    }
    worst_range = std::max(worst_range, hi - lo);
  }
  v.gains_settled = {worst_range <= tol_gain, worst_range, tol_gain};
  return v;
}

inline nlohmann::json to_json(const VerdictCheck& c)
{
  return {{"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold}};
}

inline nlohmann::json to_json(const ConvergenceVerdict& v)
{
  return {{"action_converged", to_json(v.action)},
          {"consensus_converged", to_json(v.consensus)},
          {"gains_monotone", to_json(v.gains_monotone)},
          {"gains_settled_heuristic", to_json(v.gains_settled)},
          {"all", v.all()},
          {"final_time", v.final_time},
          {"samples", v.samples}};
}

inline nlohmann::json to_json(const TheoryBounds& b)
{
  return {{"estimate", true},
          {"n_players", b.n_players},
          {"max_l", b.max_l},
          {"m", b.m},
          {"lambda_min_M", b.lambda_min_M},
          {"lambda_min_MM", b.lambda_min_MM},
          {"norm_M", b.norm_M},
          {"lambda_switch", b.lambda_switch},
          {"lbar1", b.lbar1},
          {"lbar2", b.lbar2},
          {"theta_star_bound", b.theta_star_bound},
          {"c_star_bound", b.c_star_bound},
          {"c_star_switch_bound", b.c_star_switch_bound}};
}

inline nlohmann::json to_json(const AssumptionReport& r)
{
  return {{"lipschitz_estimate", r.lipschitz_estimate},
          {"monotonicity_modulus", r.monotonicity_modulus},
          {"monotone", r.monotone()},
          {"samples_used", r.samples_used},
          {"seed", r.seed},
          {"certificate", "sampled estimate (falsifier, not a proof)"}};
}

/// Probe computing the standard per-sample diagnostics for a seeker.
inline Probe make_probe(const Seeker& seeker, ActionProfile x_star)
{
  return [&seeker, x_star = std::move(x_star)](double, const Eigen::VectorXd& s) {
    const StateLayout& layout = seeker.layout();
    SampleDiagnostics d;
    const Eigen::VectorXd x = s.head(static_cast<Eigen::Index>(layout.x_size()));
    d.consensus_error = consensus_error_norm(layout, s);
    if (x_star.size() == x.size()) d.nash_error = (x - x_star).norm();
    d.pseudo_gradient_norm = pseudo_gradient(seeker.game(), x).norm();
    const auto gains = s.segment(static_cast<Eigen::Index>(layout.gain_offset()), static_cast<Eigen::Index>(layout.gain_size()));
    d.gain_min = gains.minCoeff();
    d.gain_max = gains.maxCoeff();
    return d;
  };
}

}  // namespace nashseek
