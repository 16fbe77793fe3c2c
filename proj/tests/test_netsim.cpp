#include "ndd/netsim.hpp"
#include "ndd/networks.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ndd;

namespace {

NetworkDescriptor single(double r, double eps) {
  NetworkDescriptor net = independent_srna_network(1, r, eps);
  net.unintended.kind = UnintendedKind::None;
  return net;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(IntegrateNetwork, SingleSubsystemReachesStaticCharacteristic) {
  for (double eps : {0.1, 0.01}) {
    for (double r : {5.0, 30.0}) {
      SimulationConfig cfg;
      cfg.t_final = 60;
      const auto traj = integrate_network(single(r, eps), cfg, true);
      const double h = static_io(srna_subsystem(1, {}, eps), r, 0.0).y;
      EXPECT_LT(rel(traj.y.back()[0], h), 1e-4) << eps << " " << r;
    }
  }
}

TEST(IntegrateNetwork, ZeroInputStaysAtOrigin) {
  SimulationConfig cfg;
  cfg.t_final = 10;
  const auto traj = integrate_network(independent_srna_network(3, 0.0, 0.01), cfg, true);
  for (const auto& x : traj.states) EXPECT_EQ(x.cwiseAbs().maxCoeff(), 0.0);
}

TEST(IntegrateNetwork, TrajectoryInvariants) {
  SimulationConfig cfg;
  cfg.t_final = 20;
  cfg.output_points = 101;
  const auto traj = integrate_network(independent_srna_network(3, 10, 0.05), cfg, true);
  ASSERT_EQ(traj.times.size(), 101u);
  for (std::size_t k = 1; k < traj.times.size(); ++k) EXPECT_GT(traj.times[k], traj.times[k - 1]);
  for (const auto& x : traj.states) EXPECT_TRUE(x.allFinite());
  EXPECT_DOUBLE_EQ(traj.times.back(), 20.0);
  // w closes the loop algebraically: w_i = sum_{j != i} d_j.
  for (std::size_t k = 0; k < traj.times.size(); k += 10)
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(traj.w[k][i], traj.d[k].sum() - traj.d[k][i], 1e-12);
}

TEST(IntegrateNetwork, InitialStateDimensionChecked) {
  SimulationConfig cfg;
  cfg.initial_state = std::vector<double>{1.0, 2.0};
  EXPECT_THROW(integrate_network(independent_srna_network(3, 10, 0.05), cfg, true), ValidationError);
}

TEST(IntegrateNetwork, RejectsInvalidNetwork) {
  auto net = independent_srna_network(2, 10, 0.05);
  net.subsystems[0].epsilon = -1;
  EXPECT_THROW(integrate_network(net, {}, true), ValidationError);
}

TEST(SteadyState, ConstantTrajectory) {
  Trajectory traj;
  for (int k = 0; k <= 10; ++k) {
    traj.times.push_back(k);
    traj.y.push_back(Vector::Constant(2, 3.0));
    traj.y_rate.push_back(Vector::Zero(2));
  }
  const auto ss = steady_state_output(traj, {});
  EXPECT_TRUE(ss.converged);
  EXPECT_EQ(ss.y, Vector::Constant(2, 3.0));
}

TEST(SteadyState, TruncatedTransientNotConverged) {
  SimulationConfig cfg;
  cfg.t_final = 1.0;
  const auto traj = integrate_network(independent_srna_network(3, 10, 0.1), cfg, true);
  EXPECT_FALSE(steady_state_output(traj, cfg).converged);
}

TEST(SteadyState, CoupledNetworkMatchesAlgebraicSolve) {
  // 40-digit Newton solve of the stacked steady-state equations, all three
  // subsystems at (r0, eps) = (10, 0.1).
  const auto run = run_to_steady_state(independent_srna_network(3, 10, 0.1), {}, true);
  ASSERT_TRUE(run.steady.converged);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(run.steady.y[i], 14.071971910752388, 1e-4);
  const auto nominal = run_to_steady_state(independent_srna_network(3, 10, 0.1), {}, false);
  ASSERT_TRUE(nominal.steady.converged);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(nominal.steady.y[i], 15.445929923889893, 1e-4);
}

TEST(SteadyState, HorizonExtendsUntilConverged) {
  SimulationConfig cfg;
  cfg.t_final = 2.0;
  const auto run = run_to_steady_state(independent_srna_network(3, 10, 0.1), cfg, true);
  EXPECT_TRUE(run.steady.converged);
  EXPECT_GT(run.horizon, 2.0);
  EXPECT_LE(run.horizon, 2.0 * 1024);
}

TEST(NddError, ZeroWithoutUnintendedCoupling) {
  auto net = independent_srna_network(3, 10, 0.05);
  net.unintended.kind = UnintendedKind::None;
  EXPECT_EQ(ndd_error(net, {}), 0.0);
}

TEST(NddError, Fig2MatchesAlgebraicOracle) {
  // (eps, error) from the same 40-digit stacked solve, r0 = 10.
  const std::pair<double, double> cases[] = {
      {0.1, 1.373958013137505}, {0.01, 0.18433830182142378}, {0.001, 0.019836794572092624}};
  double prev = std::numeric_limits<double>::infinity();
  for (auto [eps, expect] : cases) {
    const double e = ndd_error(independent_srna_network(3, 10, eps), {});
    EXPECT_NEAR(e, expect, 1e-4) << eps;
    EXPECT_LT(e, prev);
    prev = e;
  }
}

TEST(NddError, LargeReferenceKeepsErrorHigh) {
  for (double eps : {0.01, 0.001}) {
    const double e = ndd_error(independent_srna_network(3, 40, eps), {});
    EXPECT_GT(e, 4.0) << eps;
  }
  EXPECT_NEAR(ndd_error(independent_srna_network(3, 40, 0.01), {}), 7.2620895776337795, 1e-4);
}

TEST(NddError, CascadeMatchesAlgebraicOracle) {
  EXPECT_NEAR(ndd_error(fig4b_cascade(0.1, 0.01), {}), 0.1436765255803433, 1e-4);
  EXPECT_NEAR(ndd_error(fig4b_cascade(0.01, 0.001), {}), 0.015692703063283447, 1e-4);
  EXPECT_NEAR(ndd_error(fig4c_cascade(0.1, 0.01), {}), 10.700114282102096, 1e-3);
}

TEST(NddError, NotConvergedWhenHorizonCapped) {
  SimulationConfig cfg;
  cfg.t_final = 0.5;
  cfg.max_horizon_doublings = 0;
  EXPECT_THROW(ndd_error(independent_srna_network(3, 10, 0.1), cfg), NotConverged);
}

TEST(Sweep, EpsilonGridDecreasing) {
  const std::vector<double> grid{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  const auto res = sweep(independent_srna_network(3, 10, 0.1), SweepAxis::Epsilon, grid);
  ASSERT_EQ(res.rows.size(), grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_EQ(res.rows[k].axis_value, grid[k]);
    EXPECT_TRUE(res.rows[k].converged);
    EXPECT_GE(res.rows[k].ndd_error, 0.0);
    EXPECT_GE(res.rows[k].seconds, 0.0);
    if (k > 0) {
      EXPECT_LT(res.rows[k].ndd_error, res.rows[k - 1].ndd_error);
    }
  }
}

TEST(Sweep, NuSettlesCascadeOntoEpsilonFloor) {
  // With slow RNA (nu = 1) the coupled cascade sits on a limit cycle; once
  // nu is small it converges, and since equilibria do not depend on nu the
  // error is the eps-limited value.
  const std::vector<double> grid{1.0, 0.1, 0.03};
  const auto res = sweep(fig4b_cascade(0.1), SweepAxis::Nu, grid);
  ASSERT_EQ(res.rows.size(), 3u);
  EXPECT_FALSE(res.rows[0].converged);
  EXPECT_GT(res.rows[0].trailing_sup, 0.1436765255803433);
  for (std::size_t k = 1; k < 3; ++k) {
    ASSERT_TRUE(res.rows[k].converged) << res.rows[k].message;
    EXPECT_NEAR(res.rows[k].ndd_error, 0.1436765255803433, 1e-4);
    EXPECT_LT(res.rows[k].trailing_sup, res.rows[0].trailing_sup);
  }
}

TEST(SteadyState, LimitCycleStopsExtendingEarly) {
  const auto run = run_to_steady_state(fig4b_cascade(0.1, 1.0), {}, true);
  EXPECT_FALSE(run.steady.converged);
  EXPECT_TRUE(run.stalled);
  EXPECT_LT(run.horizon, 100.0 * 1024);
}

TEST(Sweep, EmptyGrid) { EXPECT_TRUE(sweep(independent_srna_network(3, 10, 0.1), SweepAxis::Epsilon, {}).rows.empty()); }

TEST(Sweep, ReferenceAxisAndFailuresRecorded) {
  SimulationConfig cfg;
  cfg.t_final = 0.5;
  cfg.max_horizon_doublings = 0;
  const auto res = sweep(independent_srna_network(3, 10, 0.1), SweepAxis::Reference, {5.0, 20.0}, cfg);
  ASSERT_EQ(res.rows.size(), 2u);
  for (const auto& row : res.rows) {
    EXPECT_FALSE(row.converged);
    EXPECT_TRUE(std::isnan(row.ndd_error));
    EXPECT_NE(row.message.find("did not reach steady state"), std::string::npos);
  }
}

TEST(Sweep, AxisValueApplied) {
  const auto net = independent_srna_network(3, 10, 0.1);
  const auto a = with_axis_value(net, SweepAxis::EpsilonAndNu, 0.02);
  for (const auto& s : a.subsystems) {
    EXPECT_EQ(s.epsilon, 0.02);
    EXPECT_EQ(s.nu, 0.02);
  }
  const auto b = with_axis_value(net, SweepAxis::Reference, 7.0);
  for (const auto& e : b.edges) EXPECT_EQ(e.r_star, 7.0);
  EXPECT_EQ(parse_sweep_axis("epsilon-and-nu"), SweepAxis::EpsilonAndNu);
  EXPECT_FALSE(parse_sweep_axis("bogus").has_value());
}

TEST(Solvers, FixedStepAgreesWithAdaptive) {
  const auto net = independent_srna_network(3, 10, 0.1);
  SimulationConfig cfg;
  const auto adaptive = run_to_steady_state(net, cfg, true);
  cfg.solver = SolverKind::FixedStep;
  const auto fixed = run_to_steady_state(net, cfg, true);
  ASSERT_TRUE(adaptive.steady.converged);
  ASSERT_TRUE(fixed.steady.converged);
  for (int i = 0; i < 3; ++i) EXPECT_LT(rel(fixed.steady.y[i], adaptive.steady.y[i]), 1e-5);
}

TEST(Reduction, GapShrinksWithNu) {
  // Periodic reference so the fast lag is visible; the full and reduced
  // equilibria coincide for constant inputs.
  SimulationConfig cfg;
  cfg.t_final = 40;
  cfg.output_points = 2001;
  cfg.steady_state_window = 0.25;
  const Signal r = [](double t) { return 10.0 + 5.0 * std::sin(t); };
  Vector x0(1);
  x0 << 10.0;
  double prev = std::numeric_limits<double>::infinity();
  for (double nu : {1.0, 0.3, 0.1, 0.03, 0.01}) {
    const double gap = reduction_gap(srna_subsystem(1, {}, 0.01, nu), x0, r, constant_signal(0.0), cfg);
    EXPECT_LT(gap, prev) << nu;
    prev = gap;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(Reduction, ConstantInputSteadyStatesCoincide) {
  SimulationConfig cfg;
  cfg.t_final = 60;
  Vector x0(1);
  x0 << 0.0;
  for (double nu : {1.0, 0.1}) {
    const double gap = reduction_gap(srna_subsystem(1, {}, 0.01, nu), x0, constant_signal(10.0), constant_signal(2.0), cfg);
    EXPECT_LT(gap, 1e-5);
  }
}

TEST(OrderPreservation, IdenticalInitialConditions) {
  Vector x0(1);
  x0 << 3.0;
  EXPECT_TRUE(order_preservation_check(srna_subsystem(1, {}, 0.05), x0, x0, 10, 0, {}));
}

TEST(OrderPreservation, ReducedSrnaOrdered) {
  Vector lo(1), hi(1);
  lo << 0.0;
  hi << 5.0;
  SimulationConfig cfg;
  cfg.t_final = 30;
  EXPECT_TRUE(order_preservation_check(srna_subsystem(1, {}, 0.05), lo, hi, 10, 0, cfg));
  EXPECT_TRUE(order_preservation_check(srna_subsystem(1, {}, 0.05), lo, hi, 10, 4, cfg));
}

TEST(OrderPreservation, FullLinearExampleViolatesOrder) {
  SubsystemDescriptor sub;
  sub.kind = SubsystemKind::LinearFeedbackExample;
  sub.epsilon = 0.05;
  SimulationConfig cfg;
  cfg.t_final = 5;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  bool violated = false;
  for (int k = 0; k < 50 && !violated; ++k) {
    Vector lo(2), hi(2);
    lo << 2 * u(rng), 2 * u(rng);
    hi = lo + Vector::Constant(2, 0.0);
    hi[0] += u(rng);
    hi[1] += u(rng);
    violated = !order_preservation_check(sub, lo, hi, 1.0, 0.0, cfg, SubsystemForm::Full);
  }
  EXPECT_TRUE(violated);
}

TEST(Properties, RnaAverageBelowAttractiveBound) {
  for (double r0 : {10.0, 30.0}) {
    for (double eps : {0.1, 0.01}) {
      const auto net = independent_srna_network(3, r0, eps);
      const auto run = run_to_steady_state(net, {}, true);
      ASSERT_TRUE(run.steady.converged);
      const auto& tr = run.trajectory;
      const double t_start = tr.times.back() * 0.9;
      for (int i = 0; i < 3; ++i) {
        double sum = 0;
        int count = 0;
        for (std::size_t k = 0; k < tr.times.size(); ++k) {
          if (tr.times[k] < t_start) continue;
          sum += tr.states[k][3 * i + 1];
          ++count;
        }
        EXPECT_LE(sum / count, r0 / eps + 1e-6);
      }
    }
  }
}
