#include <gtest/gtest.h>

#include <random>

#include "nashseek/dynamics.hpp"
#include "nashseek/integrator.hpp"
#include "oracles.hpp"

using namespace nashseek;

namespace {

Eigen::VectorXd to_eigen(const oracle::Vec& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())); }

oracle::Mat to_oracle(const Eigen::MatrixXd& m)
{
  oracle::Mat out = oracle::zeros(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

Eigen::VectorXd eval(const Seeker& s, double t, const Eigen::VectorXd& state)
{
  Eigen::VectorXd ds(state.size());
  s(t, as_span(state), as_span(ds));
  return ds;
}

Eigen::MatrixXd random_positive(std::mt19937_64& rng, int n)
{
  std::uniform_real_distribution<double> u(0.5, 2.0);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = u(rng);
  return m;
}

// state with y_ij = x_j and arbitrary gains
Eigen::VectorXd consensus_state(const StateLayout& layout, const Eigen::VectorXd& x, double gain)
{
  SeekerState s = SeekerState::zeros(layout);
  s.x = x;
  for (int i = 0; i < layout.n; ++i)
    for (int j = 0; j < layout.n; ++j) s.estimate(i, j) = s.action(j);
  s.theta.setConstant(gain);
  s.c.setConstant(gain);
  s.cbar.setConstant(gain + 1.0);
  return s.flatten();
}

std::vector<Seeker> all_seekers()
{
  const GameModel g = example_game_connectivity();
  const CommGraph ring = CommGraph::ring(5);
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(5, 5);
  std::vector<Seeker> out;
  out.emplace_back(g, ring, StrategyConfig::fixed(3.0, ones));
  out.emplace_back(g, ring, StrategyConfig::node_adaptive(ones));
  out.emplace_back(g, ring, StrategyConfig::edge_adaptive());
  out.emplace_back(g, demo_switching_schedule(), StrategyConfig::edge_switching());
  return out;
}

}  // namespace

TEST(Dynamics, RhsMatchesNaiveOracleOnRandomStates)
{
  const GameModel game = example_game_connectivity();
  const CommGraph ring = CommGraph::ring(5);
  const oracle::Mat a = oracle::ring(5);
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd theta_bar = random_positive(rng, 5);
    const Eigen::MatrixXd gamma = random_positive(rng, 5);
    const double theta = 2.5;

    const oracle::Vec s_node = oracle::random_state(rng, 5, 2, false);
    const oracle::Vec s_edge = oracle::random_state(rng, 5, 2, true);

    const Seeker fixed(game, ring, StrategyConfig::fixed(theta, theta_bar));
    const Eigen::VectorXd ref_fixed =
        to_eigen(oracle::rhs(oracle::Law::Fixed, a, s_node, 2, to_oracle(theta * theta_bar)));
    EXPECT_LE((eval(fixed, 0.0, to_eigen(s_node)) - ref_fixed).cwiseAbs().maxCoeff(),
              1e-12 * std::max(1.0, ref_fixed.cwiseAbs().maxCoeff()));

    const Seeker node(game, ring, StrategyConfig::node_adaptive(gamma));
    const Eigen::VectorXd ref_node = to_eigen(oracle::rhs(oracle::Law::Node, a, s_node, 2, to_oracle(gamma)));
    const double node_scale = std::max(1.0, ref_node.cwiseAbs().maxCoeff());
    EXPECT_LE((eval(node, 0.0, to_eigen(s_node)) - ref_node).cwiseAbs().maxCoeff(), 1e-12 * node_scale);

    const Seeker edge(game, ring, StrategyConfig::edge_adaptive());
    const Eigen::VectorXd ref_edge = to_eigen(oracle::rhs(oracle::Law::Edge, a, s_edge, 2, {}));
    const double scale = std::max(1.0, ref_edge.cwiseAbs().maxCoeff());
    EXPECT_LE((eval(edge, 0.0, to_eigen(s_edge)) - ref_edge).cwiseAbs().maxCoeff(), 1e-12 * scale);

    const Seeker sw(game, demo_switching_schedule(), StrategyConfig::edge_switching());
    const double t = std::uniform_real_distribution<double>(0.0, 12.0)(rng);
    const oracle::Mat a_t = to_oracle(demo_switching_schedule().graph_at(t).adjacency());
    const Eigen::VectorXd ref_sw = to_eigen(oracle::rhs(oracle::Law::Edge, a_t, s_edge, 2, {}));
    EXPECT_LE((eval(sw, t, to_eigen(s_edge)) - ref_sw).cwiseAbs().maxCoeff(), 1e-12 * scale);
  }
}

TEST(Dynamics, CbarCompatibilityFlag)
{
  const GameModel game = example_game_connectivity();
  StrategyConfig cfg = StrategyConfig::edge_adaptive();
  cfg.cbar_rate_uses_c = true;
  const Seeker edge(game, CommGraph::ring(5), cfg);
  std::mt19937_64 rng(5);
  const oracle::Vec s = oracle::random_state(rng, 5, 2, true);
  const Eigen::VectorXd ref = to_eigen(oracle::rhs(oracle::Law::Edge, oracle::ring(5), s, 2, {}, true));
  EXPECT_LE((eval(edge, 0.0, to_eigen(s)) - ref).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
}

TEST(Dynamics, ConsensusStateDrivesActionsByPseudoGradient)
{
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(10, -3.0, 4.0);
  const Eigen::VectorXd p = pseudo_gradient(example_game_connectivity(), x);
  for (const Seeker& s : all_seekers()) {
    const Eigen::VectorXd ds = eval(s, 1.0, consensus_state(s.layout(), x, 2.0));
    const StateLayout& l = s.layout();
    EXPECT_LE((ds.head(10) + p).cwiseAbs().maxCoeff(), 1e-12) << to_string(l.kind);
    EXPECT_EQ(ds.segment(static_cast<Eigen::Index>(l.x_size()), static_cast<Eigen::Index>(l.y_size())).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(ds.tail(static_cast<Eigen::Index>(l.gain_size())).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Dynamics, EquilibriumIsFixedPoint)
{
  const Eigen::VectorXd x_star = Eigen::VectorXd::Constant(10, -0.5);
  for (const Seeker& s : all_seekers())
    for (double gain : {0.3, 7.0}) {
      const Eigen::VectorXd ds = eval(s, 6.0, consensus_state(s.layout(), x_star, gain));
      EXPECT_LE(ds.cwiseAbs().maxCoeff(), 1e-12) << to_string(s.layout().kind);
    }
}

TEST(Dynamics, NodeGainRatesNonNegative)
{
  const Seeker node(example_game_connectivity(), CommGraph::ring(5), StrategyConfig::node_adaptive(Eigen::MatrixXd::Ones(5, 5)));
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd ds = eval(node, 0.0, to_eigen(oracle::random_state(rng, 5, 2, false)));
    EXPECT_GE(ds.tail(25).minCoeff(), 0.0);
  }
}

TEST(Dynamics, EdgeGainRatesSymmetric)
{
  const Seeker edge(example_game_connectivity(), CommGraph::ring(5), StrategyConfig::edge_adaptive());
  const StateLayout& l = edge.layout();
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd ds = eval(edge, 0.0, to_eigen(oracle::random_state(rng, 5, 2, true)));
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        EXPECT_EQ(ds(static_cast<Eigen::Index>(l.c_index(i, j))), ds(static_cast<Eigen::Index>(l.c_index(j, i))));
        EXPECT_GE(ds(static_cast<Eigen::Index>(l.cbar_index(i, j))), 0.0);
      }
  }
}

TEST(Dynamics, SingleGraphSwitchingEqualsEdgeAdaptive)
{
  const GameModel game = example_game_connectivity();
  const Seeker edge(game, demo_graph_b(), StrategyConfig::edge_adaptive());
  const Seeker sw(game, SwitchingSchedule::single(demo_graph_b()), StrategyConfig::edge_switching());
  std::mt19937_64 rng(8);
  for (double t : {0.0, 0.5, 3.0, 1e4}) {
    const Eigen::VectorXd s = to_eigen(oracle::random_state(rng, 5, 2, true));
    EXPECT_EQ(eval(edge, t, s), eval(sw, t, s));
  }
}

TEST(Dynamics, SwitchingDiffersExactlyWhereAdjacencyDiffers)
{
  const GameModel game = example_game_connectivity();
  const Seeker sw(game, demo_switching_schedule(), StrategyConfig::edge_switching());
  const Seeker on_a(game, demo_graph_a(), StrategyConfig::edge_adaptive());
  const Seeker on_b(game, demo_graph_b(), StrategyConfig::edge_adaptive());
  const StateLayout& l = sw.layout();
  std::mt19937_64 rng(9);
  const Eigen::VectorXd s = to_eigen(oracle::random_state(rng, 5, 2, true));

  const double before = std::nextafter(5.0, 0.0);
  const Eigen::VectorXd left = eval(sw, before, s);   // graph b
  const Eigen::VectorXd right = eval(sw, 5.0, s);     // graph a
  EXPECT_EQ(left, eval(on_b, 0.0, s));
  EXPECT_EQ(right, eval(on_a, 0.0, s));

  const Eigen::MatrixXd diff = demo_graph_a().adjacency() - demo_graph_b().adjacency();
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const bool differs = diff(i, j) != 0.0;
      for (auto idx : {l.c_index(i, j), l.cbar_index(i, j)}) {
        const auto q = static_cast<Eigen::Index>(idx);
        EXPECT_EQ(left(q) != right(q), differs) << i << "," << j;
      }
    }
}

TEST(Dynamics, TwoPlayerHandExample)
{
  // decoupled game: grad_1 = 2 x_1 - 2, grad_2 = 2 x_2 + 4; single edge, d = 1
  const Seeker s(example_game_decoupled(), CommGraph::path(2), StrategyConfig::fixed(1.0, Eigen::MatrixXd::Ones(2, 2)));
  SeekerState st = SeekerState::zeros(s.layout());
  st.estimate(0, 1)(0) = 1.0;  // y_12 = 1, everything else 0
  const SeekerState d = s.derivative(0.0, st);
  EXPECT_DOUBLE_EQ(d.x(0), 2.0);   // -(2*y_11 - 2)
  EXPECT_DOUBLE_EQ(d.x(1), -4.0);  // -(2*y_22 + 4)
  EXPECT_DOUBLE_EQ(d.estimate(0, 0)(0), 0.0);
  EXPECT_DOUBLE_EQ(d.estimate(0, 1)(0), -2.0);  // -(a_12 (y_12 - y_22) + a_12 (y_12 - x_2))
  EXPECT_DOUBLE_EQ(d.estimate(1, 0)(0), 0.0);
  EXPECT_DOUBLE_EQ(d.estimate(1, 1)(0), 1.0);   // -(a_21 (y_22 - y_12))
  EXPECT_EQ(d.theta, Eigen::MatrixXd::Zero(2, 2));
}

TEST(Dynamics, FixedUsesConfiguredGainNotStateSlots)
{
  const GameModel game = example_game_connectivity();
  const Seeker s(game, CommGraph::ring(5), StrategyConfig::fixed(2.0, Eigen::MatrixXd::Ones(5, 5)));
  std::mt19937_64 rng(12);
  Eigen::VectorXd a = to_eigen(oracle::random_state(rng, 5, 2, false));
  Eigen::VectorXd b = a;
  b.tail(25).setConstant(1e6);
  EXPECT_EQ(eval(s, 0.0, a), eval(s, 0.0, b));
}

TEST(Dynamics, InputErrors)
{
  const GameModel game = example_game_connectivity();
  EXPECT_THROW(Seeker(game, CommGraph::ring(4), StrategyConfig::edge_adaptive()), InputError);
  EXPECT_THROW(Seeker(game, demo_switching_schedule(), StrategyConfig::edge_adaptive()), InputError);
  EXPECT_THROW(Seeker(game, CommGraph::ring(5), StrategyConfig::node_adaptive(-Eigen::MatrixXd::Ones(5, 5))), InputError);
  EXPECT_THROW(Seeker(game, CommGraph::ring(5), StrategyConfig::fixed(0.0, Eigen::MatrixXd::Ones(5, 5))), InputError);
  EXPECT_THROW(rhs_fixed(game, CommGraph::ring(5), StrategyConfig::edge_adaptive(), SeekerState{}), InputError);

  const Seeker edge(game, CommGraph::ring(5), StrategyConfig::edge_adaptive());
  SeekerState st = SeekerState::zeros(edge.layout());
  st.c.setOnes();
  EXPECT_NO_THROW(edge.check_state(st));
  st.c(0, 1) = 2.0;
  EXPECT_THROW(edge.check_state(st), InputError);

  Eigen::VectorXd short_state = Eigen::VectorXd::Zero(10);
  Eigen::VectorXd out(10);
  EXPECT_THROW(edge(0.0, as_span(short_state), as_span(out)), InputError);
}

TEST(Dynamics, DisconnectedGraphViolatesAssumption)
{
  const Seeker s(example_game_connectivity(), CommGraph::from_edges(5, {{1, 2}, {3, 4}, {4, 5}}),
                 StrategyConfig::edge_adaptive());
  EXPECT_THROW(s.require_connected(), AssumptionViolation);
}

TEST(Dynamics, FreeFunctionWrappersAgreeWithSeeker)
{
  const GameModel game = example_game_connectivity();
  const CommGraph ring = CommGraph::ring(5);
  std::mt19937_64 rng(13);
  const auto cfg = StrategyConfig::node_adaptive(Eigen::MatrixXd::Ones(5, 5));
  const Seeker node(game, ring, cfg);
  const Eigen::VectorXd s = to_eigen(oracle::random_state(rng, 5, 2, false));
  const SeekerState st = SeekerState::unflatten(node.layout(), s);
  EXPECT_EQ(rhs_node_adaptive(game, ring, cfg, st).flatten(), eval(node, 0.0, s));
  const Seeker sw(game, demo_switching_schedule(), StrategyConfig::edge_switching());
  const Eigen::VectorXd se = to_eigen(oracle::random_state(rng, 5, 2, true));
  EXPECT_EQ(rhs_edge_switching(game, demo_switching_schedule(), StrategyConfig::edge_switching(),
                               SeekerState::unflatten(sw.layout(), se), 6.0)
                .flatten(),
            eval(sw, 6.0, se));
}

TEST(State, FlattenRoundTrip)
{
  std::mt19937_64 rng(21);
  for (StrategyKind kind : {StrategyKind::Fixed, StrategyKind::NodeAdaptive, StrategyKind::EdgeAdaptive, StrategyKind::EdgeSwitching})
    for (int n = 2; n <= 4; ++n)
      for (int d = 1; d <= 3; ++d) {
        const StateLayout layout{n, d, kind};
        Eigen::VectorXd flat(static_cast<Eigen::Index>(layout.size()));
        for (Eigen::Index q = 0; q < flat.size(); ++q) flat(q) = std::normal_distribution<double>()(rng);
        const SeekerState s = SeekerState::unflatten(layout, flat);
        EXPECT_EQ(s.flatten(), flat);
        EXPECT_EQ(SeekerState::unflatten(layout, s.flatten()).flatten(), flat);
        // documented slots
        EXPECT_EQ(s.action(n - 1)(d - 1), flat(static_cast<Eigen::Index>(layout.x_index(n - 1, d - 1))));
        EXPECT_EQ(s.estimate(0, n - 1)(0), flat(static_cast<Eigen::Index>(layout.y_index(0, n - 1, 0))));
        if (is_edge_strategy(kind)) {
          EXPECT_EQ(s.c(0, 1), flat(static_cast<Eigen::Index>(layout.c_index(0, 1))));
          EXPECT_EQ(s.cbar(1, 0), flat(static_cast<Eigen::Index>(layout.cbar_index(1, 0))));
        } else {
          EXPECT_EQ(s.theta(0, 1), flat(static_cast<Eigen::Index>(layout.theta_index(0, 1))));
        }
      }
}

TEST(State, ConsensusErrorExamples)
{
  const StateLayout layout{2, 1, StrategyKind::NodeAdaptive};
  SeekerState s = SeekerState::zeros(layout);
  s.x << 1.0, 2.0;
  const ConsensusError ce = consensus_error(s);
  Eigen::VectorXd e(4);
  e << -1, -2, -1, -2;
  EXPECT_EQ(ce.e, e);
  EXPECT_DOUBLE_EQ(ce.norm, std::sqrt(10.0));

  const StateLayout big{5, 2, StrategyKind::EdgeAdaptive};
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const oracle::Vec v = oracle::random_state(rng, 5, 2, true);
    const SeekerState st = SeekerState::unflatten(big, to_eigen(v));
    EXPECT_NEAR(consensus_error(st).norm, oracle::consensus_norm(v, 5, 2), 1e-12);
    EXPECT_NEAR(consensus_error_norm(big, to_eigen(v)), oracle::consensus_norm(v, 5, 2), 1e-12);
  }
  SeekerState agree = SeekerState::zeros(big);
  agree.x.setLinSpaced(-1, 1);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) agree.estimate(i, j) = agree.action(j);
  EXPECT_EQ(consensus_error(agree).norm, 0.0);
}

TEST(Dynamics, ErrorDynamicsAlongNodeTrajectory)
{
  // de_ij/dt = -theta_ij (sum_k a_ik (e_ij - e_kj) + a_ij e_ij) - dx_j/dt
  const GameModel game = example_game_connectivity();
  const Seeker node(game, CommGraph::ring(5), StrategyConfig::node_adaptive(Eigen::MatrixXd::Ones(5, 5)));
  const StateLayout& l = node.layout();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1, 1);
  SeekerState s0 = SeekerState::zeros(l);
  for (Eigen::Index q = 0; q < s0.x.size(); ++q) s0.x(q) = u(rng);
  for (Eigen::Index q = 0; q < s0.y.size(); ++q) s0.y(q) = u(rng);
  s0.theta.setOnes();

  IntegratorConfig cfg;
  cfg.step = 1e-5;
  cfg.record_every = 1e-4;
  cfg.t_end = 0.02;
  const SimulationTrace tr = integrate(std::cref(node), s0.flatten(), cfg);
  const Eigen::MatrixXd a = CommGraph::ring(5).adjacency();
  const double h = cfg.record_every;
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < tr.states.size(); ++k) {
    const SeekerState prev = SeekerState::unflatten(l, tr.states[k - 1]);
    const SeekerState cur = SeekerState::unflatten(l, tr.states[k]);
    const SeekerState next = SeekerState::unflatten(l, tr.states[k + 1]);
    const Eigen::VectorXd e_prev = consensus_error(prev).e, e_next = consensus_error(next).e, e = consensus_error(cur).e;
    const Eigen::VectorXd fd = (e_next - e_prev) / (2 * h);
    const Eigen::VectorXd xdot = eval(node, tr.times[k], tr.states[k]).head(10);
    Eigen::VectorXd model(e.size());
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        for (int c = 0; c < 2; ++c) {
          double sum = a(i, j) * e((i * 5 + j) * 2 + c);
          for (int m = 0; m < 5; ++m) sum += a(i, m) * (e((i * 5 + j) * 2 + c) - e((m * 5 + j) * 2 + c));
          model((i * 5 + j) * 2 + c) = -cur.theta(i, j) * sum - xdot(j * 2 + c);
        }
    worst = std::max(worst, (fd - model).cwiseAbs().maxCoeff() / std::max(1.0, model.cwiseAbs().maxCoeff()));
  }
  EXPECT_LT(worst, 1e-6);
}
