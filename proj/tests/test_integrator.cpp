#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "nashseek/diagnostics.hpp"
#include "nashseek/dynamics.hpp"
#include "nashseek/integrator.hpp"
#include "nashseek/random.hpp"

using namespace nashseek;

namespace {

const Rhs decay = [](double, std::span<const double> s, std::span<double> ds) {
  for (std::size_t k = 0; k < s.size(); ++k) ds[k] = -s[k];
};

double rk4_error(double h)
{
  IntegratorConfig cfg;
  cfg.step = h;
  cfg.t_end = 1.0;
  cfg.record_every = 1.0;
  const auto tr = integrate(decay, Eigen::VectorXd::Ones(1), cfg);
  return std::abs(tr.final_state()(0) - std::exp(-1.0));
}

Eigen::VectorXd random_start(const Seeker& s, std::uint64_t seed)
{
  PortableRng rng(seed);
  SeekerState st = SeekerState::zeros(s.layout());
  for (Eigen::Index q = 0; q < st.x.size(); ++q) st.x(q) = rng.uniform(-20, 20);
  for (Eigen::Index q = 0; q < st.y.size(); ++q) st.y(q) = rng.uniform(-20, 20);
  if (is_edge_strategy(s.layout().kind)) {
    st.c.setOnes();
    st.cbar.setOnes();
  } else {
    for (Eigen::Index q = 0; q < st.theta.size(); ++q) st.theta.data()[q] = rng.uniform(-20, 20);
  }
  return st.flatten();
}

}  // namespace

TEST(Integrator, Rk4ExponentialDecay)
{
  EXPECT_LT(rk4_error(0.1), 1e-6);
}

TEST(Integrator, Rk4OrderRatio)
{
  const double ratio = rk4_error(0.1) / rk4_error(0.05);
  EXPECT_GE(ratio, 12.0);
  EXPECT_LE(ratio, 20.0);
}

TEST(Integrator, AdaptiveExponentialDecay)
{
  IntegratorConfig cfg;
  cfg.method = Method::AdaptiveRk45;
  cfg.abs_tol = cfg.rel_tol = 1e-10;
  cfg.t_end = 1.0;
  cfg.record_every = 0.25;
  const auto tr = integrate(decay, Eigen::VectorXd::Ones(1), cfg);
  EXPECT_NEAR(tr.final_state()(0), std::exp(-1.0), 1e-8);
  ASSERT_EQ(tr.times.size(), 5u);
  EXPECT_EQ(tr.times.back(), 1.0);
}

TEST(Integrator, TraceTimesStrictlyIncreasing)
{
  IntegratorConfig cfg;
  cfg.step = 0.01;
  cfg.t_end = 1.05;
  cfg.record_every = 0.1;
  const auto tr = integrate(decay, Eigen::VectorXd::Ones(3), cfg, std::vector<double>{0.33, 0.5});
  EXPECT_EQ(tr.times.front(), 0.0);
  EXPECT_EQ(tr.times.back(), 1.05);
  for (std::size_t k = 1; k < tr.times.size(); ++k) EXPECT_GT(tr.times[k], tr.times[k - 1]);
}

TEST(Integrator, ZeroRhsKeepsState)
{
  const Rhs zero = [](double, std::span<const double>, std::span<double> ds) { std::fill(ds.begin(), ds.end(), 0.0); };
  IntegratorConfig cfg;
  cfg.t_end = 2.0;
  cfg.record_every = 0.5;
  Eigen::VectorXd s0(3);
  s0 << 1.5, -2.0, 7.0;
  for (Method m : {Method::FixedRk4, Method::AdaptiveRk45}) {
    cfg.method = m;
    const auto tr = integrate(zero, s0, cfg);
    for (const auto& s : tr.states) EXPECT_EQ(s, s0);
  }
}

TEST(Integrator, Deterministic)
{
  const Seeker s(example_game_connectivity(), CommGraph::ring(5), StrategyConfig::node_adaptive(Eigen::MatrixXd::Ones(5, 5)));
  IntegratorConfig cfg;
  cfg.t_end = 1.0;
  for (Method m : {Method::FixedRk4, Method::AdaptiveRk45}) {
    cfg.method = m;
    const auto a = integrate(std::cref(s), random_start(s, 3), cfg);
    const auto b = integrate(std::cref(s), random_start(s, 3), cfg);
    ASSERT_EQ(a.states.size(), b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) EXPECT_EQ(a.states[k], b.states[k]);
    EXPECT_EQ(a.times, b.times);
  }
}

TEST(Integrator, BreakpointsAreStepBoundaries)
{
  const Seeker s(example_game_connectivity(), demo_switching_schedule(), StrategyConfig::edge_switching());
  IntegratorConfig cfg;
  cfg.t_end = 10.0;
  cfg.step = 0.003;  // does not divide the breakpoints
  cfg.record_every = 0.07;
  cfg.keep_step_times = true;
  for (Method m : {Method::FixedRk4, Method::AdaptiveRk45}) {
    cfg.method = m;
    const auto tr = integrate(std::cref(s), random_start(s, 1), cfg, s.breakpoints());
    for (double b : s.breakpoints())
      EXPECT_EQ(std::count(tr.step_times.begin(), tr.step_times.end(), b), 1) << b;
    for (std::size_t k = 1; k < tr.step_times.size(); ++k) EXPECT_GT(tr.step_times[k], tr.step_times[k - 1]);
  }
}

TEST(Integrator, StagesBeforeBreakpointSeeLeftGraph)
{
  // rhs = 1 before t = 1, 100 from t = 1 on; a step that straddled the
  // switch would mix the two
  const Rhs jump = [](double t, std::span<const double>, std::span<double> ds) { ds[0] = t < 1.0 ? 1.0 : 100.0; };
  IntegratorConfig cfg;
  cfg.step = 0.3;
  cfg.t_end = 2.0;
  cfg.record_every = 1.0;
  const auto tr = integrate(jump, Eigen::VectorXd::Zero(1), cfg, std::vector<double>{1.0});
  EXPECT_DOUBLE_EQ(tr.states[1](0), 1.0);
  EXPECT_DOUBLE_EQ(tr.states[2](0), 101.0);
}

TEST(Integrator, NanBecomesDivergenceError)
{
  const Rhs bad = [](double t, std::span<const double> s, std::span<double> ds) {
    ds[0] = t > 0.5 ? std::numeric_limits<double>::quiet_NaN() : -s[0];
  };
  IntegratorConfig cfg;
  cfg.t_end = 1.0;
  for (Method m : {Method::FixedRk4, Method::AdaptiveRk45}) {
    cfg.method = m;
    try {
      integrate(bad, Eigen::VectorXd::Ones(1), cfg);
      FAIL() << "expected DivergenceError";
    } catch (const DivergenceError& e) {
      const auto& p = e.partial_trace();
      ASSERT_FALSE(p.empty());
      for (const auto& s : p.states) EXPECT_TRUE(s.allFinite());
      EXPECT_LE(p.final_time(), 0.5 + 1e-9);
    }
  }
}

TEST(Integrator, StepUnderflowIsStiffnessError)
{
  const Rhs blowup = [](double, std::span<const double> s, std::span<double> ds) { ds[0] = s[0] * s[0]; };
  IntegratorConfig cfg;
  cfg.method = Method::AdaptiveRk45;
  cfg.t_end = 2.0;
  cfg.min_step = 1e-6;
  EXPECT_THROW(integrate(blowup, Eigen::VectorXd::Ones(1), cfg), StiffnessError);
}

TEST(Integrator, ConfigValidation)
{
  IntegratorConfig cfg;
  cfg.step = 0.1;
  cfg.record_every = 0.01;
  EXPECT_THROW(integrate(decay, Eigen::VectorXd::Ones(1), cfg), InputError);
  cfg = IntegratorConfig{};
  cfg.abs_tol = 0.0;
  EXPECT_THROW(integrate(decay, Eigen::VectorXd::Ones(1), cfg), InputError);
}

TEST(Integrator, AdaptiveMatchesFineRk4OnExampleGame)
{
  const Seeker s(example_game_connectivity(), CommGraph::ring(5), StrategyConfig::node_adaptive(Eigen::MatrixXd::Ones(5, 5)));
  const Eigen::VectorXd s0 = random_start(s, 2);
  IntegratorConfig fixed;
  fixed.step = 1e-4;
  fixed.t_end = 3.0;
  fixed.record_every = 0.5;
  IntegratorConfig adaptive = fixed;
  adaptive.method = Method::AdaptiveRk45;
  adaptive.abs_tol = adaptive.rel_tol = 1e-11;
  const auto a = integrate(std::cref(s), s0, fixed);
  const auto b = integrate(std::cref(s), s0, adaptive);
  EXPECT_LE((a.final_state() - b.final_state()).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Integrator, UntilStopsAtEquilibriumStart)
{
  const Seeker s(example_game_connectivity(), CommGraph::ring(5), StrategyConfig::edge_adaptive());
  SeekerState st = SeekerState::zeros(s.layout());
  st.x.setConstant(-0.5);
  st.y.setConstant(-0.5);
  st.c.setOnes();
  st.cbar.setOnes();
  StopCriterion stop;
  stop.pseudo_gradient_tol = 1e-9;
  stop.consensus_tol = 1e-9;
  stop.t_max = 10;
  const auto tr = integrate_until(std::cref(s), st.flatten(), IntegratorConfig{}, stop,
                                  make_probe(s, Eigen::VectorXd::Constant(10, -0.5)));
  EXPECT_TRUE(tr.converged);
  EXPECT_EQ(tr.times.size(), 1u);
  EXPECT_EQ(tr.final_time(), 0.0);
}

TEST(Integrator, UntilZeroHorizon)
{
  const Seeker s(example_game_connectivity(), CommGraph::ring(5), StrategyConfig::node_adaptive(Eigen::MatrixXd::Ones(5, 5)));
  StopCriterion stop;
  stop.consensus_tol = 1e-3;
  stop.t_max = 0.0;
  const auto tr = integrate_until(std::cref(s), random_start(s, 1), IntegratorConfig{}, stop,
                                  make_probe(s, Eigen::VectorXd::Constant(10, -0.5)));
  EXPECT_FALSE(tr.converged);
  EXPECT_EQ(tr.times.size(), 1u);
}

TEST(Integrator, UntilConvergesForNodeAdaptive)
{
  const Seeker s(example_game_connectivity(), CommGraph::ring(5), StrategyConfig::node_adaptive(Eigen::MatrixXd::Ones(5, 5)));
  StopCriterion stop;
  stop.pseudo_gradient_tol = 1e-3;
  stop.consensus_tol = 1e-3;
  stop.t_max = 50.0;
  const auto tr = integrate_until(std::cref(s), random_start(s, 4), IntegratorConfig{}, stop,
                                  make_probe(s, Eigen::VectorXd::Constant(10, -0.5)));
  EXPECT_TRUE(tr.converged);
  EXPECT_LT(tr.final_time(), 50.0);
  EXPECT_LE(tr.diagnostics.back().consensus_error, 1e-3);
  EXPECT_THROW(integrate_until(std::cref(s), random_start(s, 4), IntegratorConfig{}, stop, Probe{}), InputError);
}
