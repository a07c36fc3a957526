#pragma once

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nashseek/errors.hpp"
#include "nashseek/linalg.hpp"
#include "nashseek/random.hpp"

namespace nashseek {

/// Stacked action profile: player i owns the slice [i*d, (i+1)*d).
using ActionProfile = Eigen::VectorXd;

using Objective = std::function<double(std::span<const double> profile)>;
using PartialGradient = std::function<void(std::span<const double> profile, std::span<double> grad)>;

/// An N-player game with d-dimensional actions, described by each player's
/// partial gradient with respect to its own action. Objectives are optional.
class GameModel {
public:
  GameModel(int n_players, int action_dim, std::vector<PartialGradient> gradients,
            std::vector<Objective> objectives = {}, std::string name = {})
      : n_(n_players), d_(action_dim), gradients_(std::move(gradients)),
        objectives_(std::move(objectives)), name_(std::move(name))
  {
    if (n_ < 1 || d_ < 1) throw InputError("game needs n_players >= 1 and action_dim >= 1");
    if (static_cast<int>(gradients_.size()) != n_)
      throw InputError("game needs exactly one partial gradient per player");
    if (!objectives_.empty() && static_cast<int>(objectives_.size()) != n_)
      throw InputError("objectives, when given, must be one per player");
  }

  int n_players() const noexcept { return n_; }
  int action_dim() const noexcept { return d_; }
  int profile_size() const noexcept { return n_ * d_; }
  const std::string& name() const noexcept { return name_; }
  bool has_objectives() const noexcept { return !objectives_.empty(); }

  double objective(int player, std::span<const double> profile) const
  {
    check_profile(profile.size());
    if (!has_objectives()) throw InputError("game '" + name_ + "' has no objective evaluators");
    return objectives_[player](profile);
  }

  /// Writes grad_i f_i(profile) into `grad` (length d).
  void partial_gradient(int player, std::span<const double> profile, std::span<double> grad) const
  {
    gradients_[player](profile, grad);
  }

  void check_profile(std::size_t size) const
  {
    if (size != static_cast<std::size_t>(profile_size()))
      throw InputError("action profile has length " + std::to_string(size) + ", expected " +
                       std::to_string(profile_size()));
  }

private:
  int n_;
  int d_;
  std::vector<PartialGradient> gradients_;
  std::vector<Objective> objectives_;
  std::string name_;
};

inline std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<double> as_span(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// Stacked vector of every player's partial gradient at x.
inline Eigen::VectorXd pseudo_gradient(const GameModel& game, const ActionProfile& x)
{
  game.check_profile(static_cast<std::size_t>(x.size()));
  const int d = game.action_dim();
  Eigen::VectorXd out(game.profile_size());
  for (int i = 0; i < game.n_players(); ++i)
    game.partial_gradient(i, as_span(x), as_span(out).subspan(static_cast<std::size_t>(i * d), d));
  return out;
}

/// Central finite-difference Jacobian of the pseudo-gradient.
inline Eigen::MatrixXd pseudo_gradient_jacobian(const GameModel& game, const ActionProfile& x, double step = 1e-6)
{
  game.check_profile(static_cast<std::size_t>(x.size()));
  const Eigen::Index n = x.size();
  Eigen::MatrixXd jac(n, n);
  ActionProfile probe = x;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double h = step * std::max(1.0, std::abs(x(k)));
    probe(k) = x(k) + h;
    const Eigen::VectorXd fwd = pseudo_gradient(game, probe);
    probe(k) = x(k) - h;
    const Eigen::VectorXd bwd = pseudo_gradient(game, probe);
    probe(k) = x(k);
    jac.col(k) = (fwd - bwd) / (2.0 * h);
  }
  return jac;
}

// ---------------------------------------------------------------------------
// Nash oracle

struct NashOptions {
  int max_iterations = 200;
  double fd_step = 1e-6;
};

/// Finds the zero of the pseudo-gradient by damped Newton with a
/// finite-difference Jacobian, falling back to gradient-flow steps
/// x <- x - alpha * P(x) whenever the Newton direction fails to reduce ||P||.
/// Throws OracleFailure (carrying the best iterate) if ||P|| <= tol is not
/// reached within the iteration cap or progress stalls.
inline ActionProfile solve_nash(const GameModel& game, const ActionProfile& x0, double tol,
                                const NashOptions& opts = {})
{
  game.check_profile(static_cast<std::size_t>(x0.size()));
  if (!(tol > 0.0)) throw InputError("solve_nash tolerance must be positive");

  ActionProfile x = x0;
  Eigen::VectorXd p = pseudo_gradient(game, x);
  double r = p.norm();
  ActionProfile best = x;
  double best_r = r;

  for (int iter = 0; iter < opts.max_iterations && std::isfinite(r); ++iter) {
    if (r <= tol) return x;

    bool improved = false;
    const Eigen::MatrixXd jac = pseudo_gradient_jacobian(game, x, opts.fd_step);
    const Eigen::VectorXd dx = jac.colPivHouseholderQr().solve(-p);
    if (dx.allFinite()) {
      double alpha = 1.0;
      for (int k = 0; k < 40; ++k, alpha *= 0.5) {
        const ActionProfile trial = x + alpha * dx;
        const Eigen::VectorXd pt = pseudo_gradient(game, trial);
        const double rt = pt.norm();
        if (std::isfinite(rt) && rt < (1.0 - 1e-4 * alpha) * r) {
          x = trial;
          p = pt;
          r = rt;
          improved = true;
          break;
        }
      }
    }

    if (!improved) {
      double alpha = 1.0 / std::max(1.0, linalg::spectral_norm(jac));
      for (int k = 0; k < 40; ++k, alpha *= 0.5) {
        const ActionProfile trial = x - alpha * p;
        const Eigen::VectorXd pt = pseudo_gradient(game, trial);
        const double rt = pt.norm();
        if (std::isfinite(rt) && rt < r) {
          x = trial;
          p = pt;
          r = rt;
          improved = true;
          break;
        }
      }
    }

    if (r < best_r) {
      best = x;
      best_r = r;
    }
    if (!improved) break;
  }

  if (r <= tol) return x;
  char msg[128];
  std::snprintf(msg, sizeof msg, "Nash oracle did not reach ||P|| <= %.3g (best residual %.6g)", tol, best_r);
  throw OracleFailure(msg, best, best_r);
}

// ---------------------------------------------------------------------------
// Assumption sampling

/// Axis-aligned sampling region in the action-profile space.
struct SamplingBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static SamplingBox uniform(int dim, double lo, double hi)
  {
    return {Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi)};
  }
};

/// Sampled estimates of the Lipschitz constants l_i and the strong
/// monotonicity modulus m. These are falsifiers, not proofs.
struct AssumptionReport {
  std::vector<double> lipschitz_estimate;
  double monotonicity_modulus = 0.0;
  std::size_t samples_used = 0;
  std::uint64_t seed = 0;

  double max_lipschitz() const
  {
    double out = 0.0;
    for (double l : lipschitz_estimate) out = std::max(out, l);
    return out;
  }
  bool monotone() const { return monotonicity_modulus > 0.0; }
};

/// Each sample contributes two pairs: a uniform pair (x, z) from the box and a
/// Jacobian-guided pair (x, x + delta*v) where v is the extremal direction of
/// the local finite-difference Jacobian (smallest eigenvector of its symmetric
/// part for m, top right singular vector of player i's rows for l_i). Uniform
/// pairs alone concentrate near the average Rayleigh quotient in high
/// dimension and miss the extremes.
inline AssumptionReport validate_assumptions(const GameModel& game, const SamplingBox& box,
                                             std::size_t n_samples, std::uint64_t seed)
{
  const int dim = game.profile_size();
  const int d = game.action_dim();
  if (box.lower.size() != dim || box.upper.size() != dim)
    throw InputError("sampling box dimension does not match the action profile");
  if (!((box.upper - box.lower).array() > 0.0).all())
    throw InputError("sampling box is degenerate (zero width along some axis)");
  if (n_samples == 0) throw InputError("validate_assumptions needs at least one sample");

  PortableRng rng(seed);
  const double delta = 1e-3 * (box.upper - box.lower).minCoeff();

  AssumptionReport report;
  report.lipschitz_estimate.assign(static_cast<std::size_t>(game.n_players()), 0.0);
  report.monotonicity_modulus = std::numeric_limits<double>::infinity();
  report.samples_used = n_samples;
  report.seed = seed;

  auto record_pair = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& z, bool mono, int lip_player) {
    const Eigen::VectorXd diff = x - z;
    const double dn = diff.norm();
    if (dn == 0.0) return;
    const Eigen::VectorXd dp = pseudo_gradient(game, x) - pseudo_gradient(game, z);
    if (mono) report.monotonicity_modulus = std::min(report.monotonicity_modulus, diff.dot(dp) / (dn * dn));
    for (int i = 0; i < game.n_players(); ++i) {
      if (lip_player >= 0 && i != lip_player) continue;
      const double li = dp.segment(i * d, d).norm() / dn;
      auto& slot = report.lipschitz_estimate[static_cast<std::size_t>(i)];
      slot = std::max(slot, li);
    }
  };

  Eigen::VectorXd x(dim), z(dim);
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (int k = 0; k < dim; ++k) x(k) = rng.uniform(box.lower(k), box.upper(k));
    for (int k = 0; k < dim; ++k) z(k) = rng.uniform(box.lower(k), box.upper(k));
    record_pair(x, z, true, -1);

    const Eigen::MatrixXd jac = pseudo_gradient_jacobian(game, x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(linalg::symmetric_part(jac));
    const Eigen::VectorXd v_min = eig.eigenvectors().col(0);
    record_pair(x, x + delta * v_min, true, -1);

    for (int i = 0; i < game.n_players(); ++i) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac.middleRows(i * d, d), Eigen::ComputeFullV);
      const Eigen::VectorXd v_top = svd.matrixV().col(0);
      record_pair(x, x + delta * v_top, false, i);
    }
  }
  return report;
}

/// Worst relative mismatch between the supplied partial gradients and central
/// finite differences of the objectives over uniformly drawn points.
struct GradientAudit {
  double max_relative_error = 0.0;
  std::size_t points = 0;
  bool passed(double rel_tol) const { return max_relative_error <= rel_tol; }
};

inline GradientAudit audit_gradients(const GameModel& game, const SamplingBox& box, std::size_t n_points,
                                     std::uint64_t seed, double step = 1e-6)
{
  if (!game.has_objectives()) throw InputError("gradient audit needs objective evaluators");
  const int dim = game.profile_size();
  const int d = game.action_dim();
  PortableRng rng(seed);
  GradientAudit audit;
  audit.points = n_points;
  Eigen::VectorXd x(dim), g(d), fd(d);
  for (std::size_t s = 0; s < n_points; ++s) {
    for (int k = 0; k < dim; ++k) x(k) = rng.uniform(box.lower(k), box.upper(k));
    for (int i = 0; i < game.n_players(); ++i) {
      game.partial_gradient(i, as_span(x), as_span(g));
      for (int k = 0; k < d; ++k) {
        const int idx = i * d + k;
        const double saved = x(idx);
        x(idx) = saved + step;
        const double fp = game.objective(i, as_span(x));
        x(idx) = saved - step;
        const double fm = game.objective(i, as_span(x));
        x(idx) = saved;
        fd(k) = (fp - fm) / (2.0 * step);
      }
      const double err = (fd - g).norm() / std::max(1.0, g.norm());
      audit.max_relative_error = std::max(audit.max_relative_error, err);
    }
  }
  return audit;
}

// ---------------------------------------------------------------------------
// Built-in games

/// Affine-gradient game P(x) = Q x + b. Player i's objective is
/// f_i = 1/2 x_i^T Q_ii x_i + x_i^T (sum_{j != i} Q_ij x_j + b_i), so the
/// diagonal d x d blocks of Q must be symmetric.
inline GameModel make_quadratic_game(int n_players, int action_dim, Eigen::MatrixXd q, Eigen::VectorXd b,
                                     std::string name = "quadratic")
{
  const int dim = n_players * action_dim;
  if (n_players < 1 || action_dim < 1) throw InputError("quadratic game needs positive sizes");
  if (q.rows() != dim || q.cols() != dim || b.size() != dim)
    throw InputError("quadratic game coefficients must be (N*d)x(N*d) and N*d");
  const int d = action_dim;
  for (int i = 0; i < n_players; ++i) {
    const Eigen::MatrixXd blk = q.block(i * d, i * d, d, d);
    if ((blk - blk.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + blk.norm()))
      throw InputError("diagonal block " + std::to_string(i + 1) + " of Q must be symmetric");
  }

  std::vector<PartialGradient> grads;
  std::vector<Objective> objs;
  for (int i = 0; i < n_players; ++i) {
    grads.emplace_back([q, b, i, d](std::span<const double> x, std::span<double> out) {
      const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
      Eigen::Map<Eigen::VectorXd>(out.data(), d) = q.middleRows(i * d, d) * xv + b.segment(i * d, d);
    });
    objs.emplace_back([q, b, i, d](std::span<const double> x) {
      const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
      const Eigen::VectorXd xi = xv.segment(i * d, d);
      const Eigen::VectorXd coupling = q.middleRows(i * d, d) * xv - q.block(i * d, i * d, d, d) * xi;
      return 0.5 * xi.dot(q.block(i * d, i * d, d, d) * xi) + xi.dot(coupling + b.segment(i * d, d));
    });
  }
  return GameModel(n_players, action_dim, std::move(grads), std::move(objs), std::move(name));
}

/// Direct linear solve of Q x = -b for affine-gradient games.
inline ActionProfile affine_equilibrium(const Eigen::MatrixXd& q, const Eigen::VectorXd& b)
{
  Eigen::FullPivLU<Eigen::MatrixXd> lu(q);
  if (!lu.isInvertible()) throw AssumptionViolation("affine game has a singular pseudo-gradient Jacobian");
  return lu.solve(-b);
}

/// Five mobile sensors in the plane (d = 2) trading off distance to the origin
/// against distance to a neighbour:
///
///   f1 = |x1|^2 + x11 + x12 + 1 + |x1 - x2|^2
///   f2 = 2|x2|^2 + 2x21 + 2x22 + 2 + |x2 - x3|^2
///   f3 = 3|x3|^2 + 3x31 + 3x32 + 3 + |x3 - x2|^2
///   f4 = 4|x4|^2 + 4x41 + 4x42 + 4 + |x4 - x2|^2 + |x4 - x5|^2
///   f5 = 5|x5|^2 + 5x51 + 5x52 + 5 + |x5 - x1|^2
///
/// Every component of the unique equilibrium is -0.5.
inline GameModel example_game_connectivity()
{
  constexpr int n = 5;
  constexpr int d = 2;
  auto at = [](std::span<const double> x, int player, int k) { return x[static_cast<std::size_t>(player * d + k)]; };
  auto sq = [&](std::span<const double> x, int p) { return at(x, p, 0) * at(x, p, 0) + at(x, p, 1) * at(x, p, 1); };
  auto dist2 = [&](std::span<const double> x, int p, int q) {
    const double a = at(x, p, 0) - at(x, q, 0);
    const double b = at(x, p, 1) - at(x, q, 1);
    return a * a + b * b;
  };

  std::vector<Objective> objs{
      [=](std::span<const double> x) { return sq(x, 0) + at(x, 0, 0) + at(x, 0, 1) + 1.0 + dist2(x, 0, 1); },
      [=](std::span<const double> x) { return 2.0 * (sq(x, 1) + at(x, 1, 0) + at(x, 1, 1) + 1.0) + dist2(x, 1, 2); },
      [=](std::span<const double> x) { return 3.0 * (sq(x, 2) + at(x, 2, 0) + at(x, 2, 1) + 1.0) + dist2(x, 2, 1); },
      [=](std::span<const double> x) {
        return 4.0 * (sq(x, 3) + at(x, 3, 0) + at(x, 3, 1) + 1.0) + dist2(x, 3, 1) + dist2(x, 3, 4);
      },
      [=](std::span<const double> x) { return 5.0 * (sq(x, 4) + at(x, 4, 0) + at(x, 4, 1) + 1.0) + dist2(x, 4, 0); },
  };

  // grad_i f_i = 2*w_i*x_i + w_i + 2*sum_{neighbours q in f_i} (x_i - x_q)
  std::vector<PartialGradient> grads{
      [=](std::span<const double> x, std::span<double> g) {
        for (int k = 0; k < d; ++k) g[k] = 4.0 * at(x, 0, k) - 2.0 * at(x, 1, k) + 1.0;
      },
      [=](std::span<const double> x, std::span<double> g) {
        for (int k = 0; k < d; ++k) g[k] = 6.0 * at(x, 1, k) - 2.0 * at(x, 2, k) + 2.0;
      },
      [=](std::span<const double> x, std::span<double> g) {
        for (int k = 0; k < d; ++k) g[k] = 8.0 * at(x, 2, k) - 2.0 * at(x, 1, k) + 3.0;
      },
      [=](std::span<const double> x, std::span<double> g) {
        for (int k = 0; k < d; ++k) g[k] = 12.0 * at(x, 3, k) - 2.0 * at(x, 1, k) - 2.0 * at(x, 4, k) + 4.0;
      },
      [=](std::span<const double> x, std::span<double> g) {
        for (int k = 0; k < d; ++k) g[k] = 12.0 * at(x, 4, k) - 2.0 * at(x, 0, k) + 5.0;
      },
  };
  return GameModel(n, d, std::move(grads), std::move(objs), "connectivity5");
}

/// Two scalar players with f_i = (x_i - c_i)^2, c = (1, -2).
inline GameModel example_game_decoupled()
{
  Eigen::MatrixXd q = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd b(2);
  b << -2.0, 4.0;
  return make_quadratic_game(2, 1, q, b, "decoupled2");
}

inline std::vector<std::string> registered_games() { return {"connectivity5", "decoupled2"}; }

inline GameModel game_from_registry(const std::string& name)
{
  if (name == "connectivity5") return example_game_connectivity();
  if (name == "decoupled2") return example_game_decoupled();
  throw InputError("unknown game '" + name + "'");
}

}  // namespace nashseek
