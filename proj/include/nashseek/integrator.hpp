#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nashseek/errors.hpp"

namespace nashseek {

using Rhs = std::function<void(double t, std::span<const double> state, std::span<double> derivative)>;

enum class Method { FixedRk4, AdaptiveRk45 };

struct IntegratorConfig {
  Method method = Method::FixedRk4;
  double step = 1e-3;  // fixed step, or initial step for the adaptive method
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  double t_end = 10.0;
  double record_every = 0.01;
  double min_step = 1e-12;      // adaptive step-underflow threshold
  bool keep_step_times = false;  // store every internal step boundary

  void validate() const
  {
    if (!(step > 0.0)) throw InputError("integrator step must be positive");
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw InputError("integrator tolerances must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InputError("t_end must be finite and non-negative");
    if (!(record_every > 0.0)) throw InputError("record_every must be positive");
    if (method == Method::FixedRk4 && record_every < step) throw InputError("record_every must be >= step for RK4");
  }
};

/// Per-sample scalar summaries. NaN marks a quantity the probe does not know.
struct SampleDiagnostics {
  double consensus_error = std::numeric_limits<double>::quiet_NaN();
  double nash_error = std::numeric_limits<double>::quiet_NaN();  // |x - x*|
  double pseudo_gradient_norm = std::numeric_limits<double>::quiet_NaN();
  double gain_min = std::numeric_limits<double>::quiet_NaN();
  double gain_max = std::numeric_limits<double>::quiet_NaN();
  double lyapunov = std::numeric_limits<double>::quiet_NaN();
};

using Probe = std::function<SampleDiagnostics(double t, const Eigen::VectorXd& state)>;

struct SimulationTrace {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<SampleDiagnostics> diagnostics;  // empty when no probe was given
  std::vector<double> step_times;              // filled with keep_step_times
  bool converged = false;
  std::size_t steps = 0;
  std::size_t rejected_steps = 0;

  bool empty() const { return times.empty(); }
  const Eigen::VectorXd& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
};

/// Non-finite state reached. Carries the trace up to and including the last
/// finite snapshot.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(const std::string& what, SimulationTrace partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const SimulationTrace& partial_trace() const noexcept { return partial_; }

private:
  SimulationTrace partial_;
};

struct StopCriterion {
  double pseudo_gradient_tol = std::numeric_limits<double>::infinity();
  double consensus_tol = std::numeric_limits<double>::infinity();
  double nash_error_tol = std::numeric_limits<double>::infinity();
  double t_max = 100.0;

  bool met(const SampleDiagnostics& d) const
  {
    auto ok = [](double value, double tol) { return std::isinf(tol) || value <= tol; };
    return ok(d.pseudo_gradient_norm, pseudo_gradient_tol) && ok(d.consensus_error, consensus_tol) &&
           ok(d.nash_error, nash_error_tol);
  }
};

namespace detail {

/// Sorted, merged event times in [0, t_end]: every record time, t_end and each
/// breakpoint inside the horizon. Returns (time, is_record, is_breakpoint).
struct Event {
  double t;
  bool record;
  bool breakpoint;
};

inline std::vector<Event> build_events(double t_end, double record_every, std::span<const double> breakpoints)
{
  std::vector<Event> events;
  const auto n_rec = static_cast<long long>(std::floor(t_end / record_every + 1e-9));
  for (long long k = 0; k <= n_rec; ++k) {
    const double t = std::min(static_cast<double>(k) * record_every, t_end);
    events.push_back({t, true, false});
  }
  if (events.back().t < t_end) events.push_back({t_end, true, false});
  for (double b : breakpoints)
    if (b > 0.0 && b <= t_end) events.push_back({b, false, true});
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });

  std::vector<Event> merged;
  for (const Event& e : events) {
    const double tol = 1e-12 * std::max(1.0, std::abs(e.t));
    if (!merged.empty() && std::abs(merged.back().t - e.t) <= tol) {
      // breakpoints win the exact time value
      if (e.breakpoint) merged.back().t = e.t;
      merged.back().record = merged.back().record || e.record;
      merged.back().breakpoint = merged.back().breakpoint || e.breakpoint;
    } else {
      merged.push_back(e);
    }
  }
  return merged;
}

class Stepper {
public:
  Stepper(const Rhs& rhs, const IntegratorConfig& cfg, Eigen::Index n)
      : rhs_(rhs), cfg_(cfg), k1_(n), k2_(n), k3_(n), k4_(n), k5_(n), k6_(n), k7_(n), tmp_(n), next_(n), h_(cfg.step)
  {}

  void eval(double t, const Eigen::VectorXd& s, Eigen::VectorXd& out)
  {
    rhs_(t, {s.data(), static_cast<std::size_t>(s.size())}, {out.data(), static_cast<std::size_t>(out.size())});
  }

  /// Advances s from a to b. Stage times are clamped to `t_cap` so that a
  /// discontinuity at b is approached from the left.
  template <class OnStep>
  void advance(double a, double b, Eigen::VectorXd& s, double t_cap, SimulationTrace& trace, OnStep&& on_step)
  {
    if (cfg_.method == Method::FixedRk4)
      rk4(a, b, s, t_cap, trace, on_step);
    else
      dopri(a, b, s, t_cap, trace, on_step);
  }

private:
  template <class OnStep>
  void rk4(double a, double b, Eigen::VectorXd& s, double t_cap, SimulationTrace& trace, OnStep& on_step)
  {
    const auto n = static_cast<long long>(std::max(1.0, std::ceil((b - a) / cfg_.step - 1e-9)));
    const double h = (b - a) / static_cast<double>(n);
    for (long long i = 0; i < n; ++i) {
      const double t = a + static_cast<double>(i) * h;
      const double t_next = (i + 1 == n) ? b : a + static_cast<double>(i + 1) * h;
      const double hh = t_next - t;
      auto tc = [&](double v) { return std::min(v, t_cap); };
      eval(tc(t), s, k1_);
      if (!k1_.allFinite()) on_step(t, false);
      tmp_ = s + 0.5 * hh * k1_;
      eval(tc(t + 0.5 * hh), tmp_, k2_);
      tmp_ = s + 0.5 * hh * k2_;
      eval(tc(t + 0.5 * hh), tmp_, k3_);
      tmp_ = s + hh * k3_;
      eval(tc(t_next), tmp_, k4_);
      next_ = s + (hh / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
      if (!next_.allFinite()) on_step(t, false);
      s.swap(next_);
      ++trace.steps;
      on_step(t_next, true);
    }
  }

  // Dormand-Prince 5(4), local extrapolation, no dense output.
  template <class OnStep>
  void dopri(double a, double b, Eigen::VectorXd& s, double t_cap, SimulationTrace& trace, OnStep& on_step)
  {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    double t = a;
    auto tc = [&](double v) { return std::min(v, t_cap); };
    while (t < b) {
      eval(tc(t), s, k1_);
      if (!k1_.allFinite()) on_step(t, false);
      for (;;) {
        double h = std::min(h_, b - t);
        const bool lands = (t + h >= b) || (b - (t + h) <= 1e-12 * std::max(1.0, std::abs(b)));
        if (lands) h = b - t;
        if (h < cfg_.min_step && !lands)
          throw StiffnessError("adaptive step underflow at t = " + std::to_string(t) + " (h = " + std::to_string(h) + ")", t);

        tmp_ = s + h * (a21 * k1_);
        eval(tc(t + c2 * h), tmp_, k2_);
        tmp_ = s + h * (a31 * k1_ + a32 * k2_);
        eval(tc(t + c3 * h), tmp_, k3_);
        tmp_ = s + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
        eval(tc(t + c4 * h), tmp_, k4_);
        tmp_ = s + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
        eval(tc(t + c5 * h), tmp_, k5_);
        tmp_ = s + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
        eval(tc(t + h), tmp_, k6_);
        next_ = s + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
        eval(tc(t + h), next_, k7_);

        double err = std::numeric_limits<double>::infinity();
        if (next_.allFinite() && k7_.allFinite()) {
          tmp_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
          const Eigen::ArrayXd scale =
              cfg_.abs_tol + cfg_.rel_tol * s.array().abs().max(next_.array().abs());
          err = std::sqrt((tmp_.array() / scale).square().mean());
        }

        if (err <= 1.0) {
          const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
          t = lands ? b : t + h;
          s.swap(next_);
          ++trace.steps;
          // keep the pre-landing step size when the landing step was truncated
          h_ = lands ? std::max(h_, h * factor) : h * factor;
          on_step(t, true);
          break;
        }
        ++trace.rejected_steps;
        h_ = h * (std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.5) : 0.1);
        // non-finite trials all the way down: treat as divergence, not stiffness
        if (h_ < cfg_.min_step && !std::isfinite(err)) on_step(t, false);
        if (h_ < cfg_.min_step)
          throw StiffnessError("adaptive step underflow at t = " + std::to_string(t) + " (h = " + std::to_string(h_) + ")", t);
      }
    }
  }

  const Rhs& rhs_;
  const IntegratorConfig& cfg_;
  Eigen::VectorXd k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, next_;
  double h_;
};

inline SimulationTrace run(const Rhs& rhs, Eigen::VectorXd s, const IntegratorConfig& cfg,
                           std::span<const double> breakpoints, const Probe& probe, const StopCriterion* stop)
{
  cfg.validate();
  if (!s.allFinite()) throw InputError("initial state is not finite");

  SimulationTrace trace;
  auto record = [&](double t, const Eigen::VectorXd& state) {
    trace.times.push_back(t);
    trace.states.push_back(state);
    if (probe) trace.diagnostics.push_back(probe(t, state));
  };

  record(0.0, s);
  if (cfg.keep_step_times) trace.step_times.push_back(0.0);
  if (stop && probe && stop->met(trace.diagnostics.back())) {
    trace.converged = true;
    return trace;
  }

  const std::vector<Event> events = build_events(cfg.t_end, cfg.record_every, breakpoints);
  Stepper stepper(rhs, cfg, s.size());
  Eigen::VectorXd last_good = s;
  double last_good_t = 0.0;

  auto on_step = [&](double t, bool finite) {
    if (!finite || !s.allFinite()) {
      if (trace.times.back() != last_good_t) record(last_good_t, last_good);
      throw DivergenceError("state became non-finite after t = " + std::to_string(last_good_t), std::move(trace));
    }
    last_good = s;
    last_good_t = t;
    if (cfg.keep_step_times) trace.step_times.push_back(t);
  };

  double t = 0.0;
  for (std::size_t k = 1; k < events.size(); ++k) {
    const Event& ev = events[k];
    const double t_cap = ev.breakpoint ? std::nextafter(ev.t, -std::numeric_limits<double>::infinity()) : ev.t;
    stepper.advance(t, ev.t, s, t_cap, trace, on_step);
    t = ev.t;
    if (ev.record) {
      record(t, s);
      if (stop && probe && stop->met(trace.diagnostics.back())) {
        trace.converged = true;
        break;
      }
    }
  }
  return trace;
}

}  // namespace detail

/// Integrates s' = rhs(t, s) from 0 to cfg.t_end, recording every
/// cfg.record_every. Steps never straddle a breakpoint: each one is landed on
/// exactly, with the preceding stages evaluated just left of it.
inline SimulationTrace integrate(const Rhs& rhs, const Eigen::VectorXd& s0, const IntegratorConfig& cfg,
                                 std::span<const double> breakpoints = {}, const Probe& probe = {})
{
  return detail::run(rhs, s0, cfg, breakpoints, probe, nullptr);
}

/// Like integrate, with horizon stop.t_max, stopping at the first recorded
/// sample whose probe diagnostics meet every threshold.
inline SimulationTrace integrate_until(const Rhs& rhs, const Eigen::VectorXd& s0, IntegratorConfig cfg,
                                       const StopCriterion& stop, const Probe& probe,
                                       std::span<const double> breakpoints = {})
{
  if (!probe) throw InputError("integrate_until needs a probe to evaluate the stop criterion");
  cfg.t_end = stop.t_max;
  return detail::run(rhs, s0, cfg, breakpoints, probe, &stop);
}

}  // namespace nashseek
