#include "ndd/characteristics.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ndd;

namespace {

SubsystemDescriptor srna_desc(double eps, int id = 1, double alpha = 100, double lambda = 1, double delta = 1,
                              double kappa = 1) {
  SubsystemDescriptor s;
  s.id = id;
  s.kind = SubsystemKind::SrnaFeedback;
  s.params = {{"alpha", alpha}, {"lambda", lambda}, {"beta", 1}, {"kappa", kappa}, {"delta", delta}};
  s.epsilon = eps;
  return s;
}

SubsystemDescriptor linear_desc(double eps) {
  SubsystemDescriptor s;
  s.kind = SubsystemKind::LinearFeedbackExample;
  s.epsilon = eps;
  return s;
}

SubsystemDescriptor generic_desc(const std::string& model, ParamMap params) {
  SubsystemDescriptor s;
  s.kind = SubsystemKind::GenericOde;
  s.model = model;
  s.params = std::move(params);
  s.epsilon = 0.1;
  return s;
}

gene::SrnaParams fig2(double eps) {
  gene::SrnaParams p;
  p.alpha = 100;
  p.epsilon = eps;
  return p;
}

Vector integrate_long(const Dynamics& dyn, const Vector& x0, double r, double w, double horizon) {
  OdeRhs f = [&](const Vector& x, double, Vector& dx) { dx = dyn.rhs(x, r, w); };
  OdeOptions o;
  o.rel_tol = 1e-11;
  o.abs_tol = 1e-12;
  return integrate_ode(f, x0, 0.0, {horizon}, o).states.back();
}

double rel_diff(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST(SolveEquilibrium, ZeroReferenceGivesZeroProtein) {
  for (double w : {0.0, 3.0, 40.0}) {
    const Vector x = solve_equilibrium(srna_desc(0.01), 0.0, w);
    EXPECT_EQ(x[0], 0.0);
    EXPECT_EQ(x[1], 0.0);
  }
}

TEST(SolveEquilibrium, SrnaNearNominalAtSmallEpsilon) {
  const Vector x = solve_equilibrium(srna_desc(0.01), 10.0, 0.0);
  // High-precision oracle for p at (r, w, eps) = (10, 0, 0.01).
  EXPECT_NEAR(x[0], 10.822672577390163, 1e-9);
  EXPECT_LT(std::abs(x[0] - 10.0), 100.0 * 0.01);
  const Dynamics dyn = make_dynamics(srna_desc(0.01));
  EXPECT_TRUE(residual_ok(dyn, x, 10.0, 0.0, 1e-10));
}

TEST(SolveEquilibrium, LinearExampleClosedForm) {
  // x = (r + eps w)/(1 + eps), z = x - w, tending to (1, 1) as eps -> 0.
  for (double eps : {0.1, 1e-3}) {
    const Vector x = solve_equilibrium(linear_desc(eps), 1.0, 0.0);
    EXPECT_NEAR(x[0], 1.0 / (1.0 + eps), 1e-12);
    EXPECT_NEAR(x[1], 1.0 / (1.0 + eps), 1e-12);
  }
  const Vector x = solve_equilibrium(linear_desc(1e-6), 1.0, 0.0);
  EXPECT_NEAR(x[0], 1.0, 1e-5);
  EXPECT_NEAR(x[1], 1.0, 1e-5);
}

TEST(SolveEquilibrium, GenericNewtonPath) {
  const auto desc = generic_desc("activated-gene", {{"c", 0.5}, {"k", 2.0}, {"kd", 4.0}});
  const auto io = static_io(desc, 6.0, 2.0);
  EXPECT_NEAR(io.y, 6.0 / (1.0 + 1.0) / 2.0, 1e-10);
  EXPECT_NEAR(io.d, io.y / 4.0, 1e-12);
}

TEST(SolveEquilibrium, MultipleRootsReported) {
  // x' = r + 3 x^2/(1 + x^2) - x has three equilibria at r = 0.01.
  const auto desc = generic_desc("bistable-switch", {{"b", 3.0}});
  EXPECT_THROW(solve_equilibrium(desc, 0.01, 0.0), MultipleRoots);
  // A large input leaves a single equilibrium.
  EXPECT_NO_THROW(solve_equilibrium(desc, 3.0, 0.0));
}

TEST(SolveEquilibrium, UnknownModel) {
  EXPECT_THROW(solve_equilibrium(generic_desc("no-such-model", {}), 1.0, 0.0), ValidationError);
}

TEST(SolveEquilibrium, AgreesWithLongHorizonIntegration) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 20; ++k) {
    const double eps = std::pow(10.0, -1.0 - u(rng));
    const double r = 5 + 85 * u(rng), w = 20 * u(rng);
    const Dynamics dyn = make_dynamics(srna_desc(eps));
    const Vector x = solve_equilibrium(dyn, r, w);
    const Vector x0 = Vector::Zero(3);
    EXPECT_LT(rel_diff(integrate_long(dyn, x0, r, w, 60.0), x), 1e-5) << k;
  }
  for (int k = 0; k < 20; ++k) {
    const double eps = std::pow(10.0, -2.0 * u(rng));
    const double r = 10 * u(rng), w = 10 * u(rng);
    const Dynamics dyn = make_dynamics(linear_desc(eps));
    const Vector x = solve_equilibrium(dyn, r, w);
    EXPECT_LT(rel_diff(integrate_long(dyn, Vector::Zero(2), r, w, 60.0), x), 1e-5) << k;
  }
  for (int k = 0; k < 20; ++k) {
    const auto desc = generic_desc("activated-gene", {{"c", u(rng)}, {"k", 0.5 + u(rng)}, {"kd", 1.0}});
    const double r = 10 * u(rng), w = 10 * u(rng);
    const Dynamics dyn = make_dynamics(desc);
    const Vector x = solve_equilibrium(dyn, r, w);
    EXPECT_LT(rel_diff(integrate_long(dyn, Vector::Zero(1), r, w, 80.0), x), 1e-5) << k;
  }
}

TEST(SolveEquilibrium, InitialConditionIndependence) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 10; ++k) {
    const double r = 5 + 85 * u(rng), w = 20 * u(rng);
    const Dynamics dyn = make_dynamics(srna_desc(0.05));
    Vector a(3), b(3);
    a << 100 * u(rng), 100 * u(rng), 100 * u(rng);
    b << 100 * u(rng), 100 * u(rng), 100 * u(rng);
    EXPECT_LT(rel_diff(integrate_long(dyn, a, r, w, 80.0), integrate_long(dyn, b, r, w, 80.0)), 1e-5) << k;
  }
}

TEST(StaticIO, SrnaOutputs) {
  const auto zero = static_io(srna_desc(0.01), 0.0, 0.0);
  EXPECT_EQ(zero.y, 0.0);
  EXPECT_EQ(zero.d, 0.0);
  const auto io = static_io(srna_desc(0.01, 1, 100, 1, 1, 2.0), 10.0, 1.0);
  EXPECT_NEAR(io.d, io.state[1] / 2.0, 1e-15);
  EXPECT_NEAR(static_io(srna_desc(1e-7), 10.0, 0.0).d, 1.0 / 9.0, 1e-4);
}

TEST(StaticIO, MonotoneInInputs) {
  const Dynamics dyn = make_dynamics(srna_desc(0.02));
  for (double r = 5; r <= 95; r += 10) {
    for (double w = 0; w <= 50; w += 5) {
      const double hr = 1e-4 * (1 + r), hw = 1e-4 * (1 + w);
      EXPECT_GT(static_io(dyn, r + hr, w).y, static_io(dyn, r - hr, w).y);
      EXPECT_LT(static_io(dyn, r, w + hw).y, static_io(dyn, r, std::max(0.0, w - hw)).y);
    }
  }
}

TEST(StaticIO, NominalErrorShrinksWithEpsilon) {
  for (double r = 5; r <= 95; r += 15) {
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.1, 0.03, 0.01, 0.003, 0.001}) {
      const double e = std::abs(static_io(srna_desc(eps), r, 0.0).y - r);
      EXPECT_LT(e, prev);
      prev = e;
    }
  }
}

TEST(Monotonicity, VerdictsPerFamily) {
  const auto lin = analyze_monotonicity(make_dynamics(linear_desc(0.1)));
  EXPECT_FALSE(lin.full.monotone);
  ASSERT_TRUE(lin.reduced.has_value());
  EXPECT_TRUE(lin.reduced->monotone);

  const auto srna = analyze_monotonicity(make_dynamics(srna_desc(0.05)));
  EXPECT_FALSE(srna.full.monotone);
  ASSERT_TRUE(srna.reduced.has_value());
  ASSERT_TRUE(srna.reduced->monotone);
  EXPECT_EQ(srna.reduced->sigma_x[0], 1);
  EXPECT_EQ(srna.reduced->sigma_u[0], 1);
  EXPECT_EQ(srna.reduced->sigma_u[1], -1);
  EXPECT_TRUE(srna.via_reduction());
}

TEST(GainFunction, DegenerateBoxGivesStaticDisturbance) {
  const GainFunction g(make_dynamics(srna_desc(0.01)));
  for (double r : {7.0, 30.0, 80.0})
    for (double w : {0.0, 4.0})
      EXPECT_NEAR(g.psi(r, w, r, w), static_io(srna_desc(0.01), r, w).d, 1e-10);
}

TEST(GainFunction, SrnaSpecialization) {
  // psi = m(phi(r-, w+), r+)/kappa.
  const auto p = fig2(0.05);
  const GainFunction g(make_dynamics(srna_desc(0.05)));
  const double rp = 40, rm = 30, wp = 5, wm = 1;
  const double expect = gene::boundary_layer_equilibrium(gene::reduced_equilibrium(rm, wp, p), rp, p).m / p.kappa;
  EXPECT_NEAR(g.psi(rp, wp, rm, wm), expect, 1e-12 * (1 + expect));
}

TEST(GainFunction, PsiStarMatchesClosedFormAndOracle) {
  for (double eps : {0.1, 0.01, 0.001}) {
    const auto p = fig2(eps);
    const GainFunction g(make_dynamics(srna_desc(eps)));
    for (int i = 0; i < 10; ++i) {
      const double r = 5 + 90.0 * i / 9;
      for (int j = 0; j < 10; ++j) {
        const double w = 30.0 * j / 9;
        const double a = gain_psi_star(g, w, 0.0, r), b = gene::psi_star_closed_form(w, r, p);
        EXPECT_NEAR(a, b, 1e-8 * (1 + b));
      }
    }
  }
  // Independent 30-digit solves of the full steady state.
  EXPECT_NEAR(gene::psi_star_closed_form(0, 10, fig2(0.001)), 0.11221102101596923, 1e-12);
  EXPECT_NEAR(gene::psi_star_closed_form(2, 30, fig2(0.01)), 1.2990930272245769, 1e-11);
  EXPECT_NEAR(gene::psi_star_closed_form(10, 60, fig2(0.1)), 15.700400326589247, 1e-9);
  const GainFunction g(make_dynamics(srna_desc(1e-7)));
  EXPECT_NEAR(g.psi_star(0, 0, 10), 1.0 / 9.0, 1e-4);
  EXPECT_EQ(g.psi_star(3, 1, 0), 0.0);
}

TEST(GainFunction, NondecreasingInUpperDisturbance) {
  const GainFunction g(make_dynamics(srna_desc(0.02)));
  for (double r : {10.0, 50.0}) {
    double prev = -1;
    for (double w = 0; w <= 40; w += 2) {
      const double v = g.psi(r, w, r, 0.0);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(GainFunction, LinearExampleViaReduction) {
  // Reduced: x' = -x + (r - x)/eps + w, d = (r - x)/eps. Orders (+, +; +),
  // rho decreasing in x. psi(u+, u-) = (r+ - phi(r-, w-))/eps.
  const double eps = 0.1;
  const GainFunction g(make_dynamics(linear_desc(eps)));
  auto phi = [&](double r, double w) { return (r + eps * w) / (1 + eps); };
  EXPECT_NEAR(g.psi(2.0, 1.0, 1.0, 0.5), (2.0 - phi(1.0, 0.5)) / eps, 1e-9);
}

TEST(GainFunction, NotMonotoneWithoutReduction) {
  Dynamics d = make_dynamics(srna_desc(0.05));
  d.reduced.reset();
  EXPECT_THROW(GainFunction{d}, NotMonotone);
}

TEST(NominalReference, IndependentTriple) {
  NetworkDescriptor net;
  for (int i = 1; i <= 3; ++i) {
    net.subsystems.push_back(srna_desc(0.01, i));
    Edge e;
    e.to = i;
    e.r_star = 10;
    net.edges.push_back(e);
  }
  const Vector r = nominal_reference(net);
  EXPECT_EQ(r, Vector::Constant(3, 10.0));
}

TEST(NominalReference, Cascade) {
  NetworkDescriptor net;
  for (int i = 1; i <= 5; ++i) net.subsystems.push_back(srna_desc(0.01, i, 70, 5, 0.5, 10));
  Edge src;
  src.to = 1;
  src.r_star = 10;
  net.edges.push_back(src);
  for (int i = 1; i < 5; ++i) {
    Edge e;
    e.from = i;
    e.to = i + 1;
    e.type = EdgeType::Hill;
    e.B = 10;
    e.k = 6;
    e.n = 4;
    net.edges.push_back(e);
  }
  const Vector r = nominal_reference(net);
  // Independent 30-digit evaluation of the Hill chain.
  const double expect[] = {10.0, 8.8526912181303116, 8.2575678120183468, 7.8202093492447375, 7.4265374203906746};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(r[i], expect[i], 1e-12);
}

TEST(NominalReference, EmptyNetwork) { EXPECT_EQ(nominal_reference(NetworkDescriptor{}).size(), 0); }

TEST(NominalOutput, ExtrapolatedWhenFamilyHasNoFormula) {
  const auto desc = generic_desc("activated-gene", {{"c", 0.5}, {"k", 2.0}, {"kd", 1.0}});
  const auto est = nominal_output(desc, 6.0);
  EXPECT_TRUE(est.extrapolated);
  EXPECT_NEAR(est.value, 3.0, 1e-9);
  const auto exact = nominal_output(srna_desc(0.1), 6.0);
  EXPECT_FALSE(exact.extrapolated);
  EXPECT_DOUBLE_EQ(exact.value, 6.0);
}

TEST(Claims, NominalErrorIsLinearInEpsilon) {
  std::vector<double> rs;
  for (int k = 0; k < 19; ++k) rs.push_back(5 + 5.0 * k);
  const auto fit = fit_nominal_error(fig2(0.1), rs, {0.1, 0.05, 0.02, 0.01});
  EXPECT_GE(fit.exponent, 0.9);
  EXPECT_LE(fit.exponent, 1.1);
  EXPECT_GT(fit.constant, 0.0);
  EXPECT_TRUE(std::isfinite(fit.constant));
}

TEST(Claims, DisturbanceErrorBound) {
  std::vector<double> rs;
  for (int k = 0; k < 19; ++k) rs.push_back(5 + 5.0 * k);
  const auto fit = fit_disturbance_error(fig2(0.1), rs, {1, 5, 20}, {0.1, 0.05, 0.02, 0.01, 1e-3, 1e-4, 1e-5},
                                         {0.005, 0.002, 3e-4, 3e-5});
  EXPECT_LE(fit.max_ratio_on_check, 1.0);
  EXPECT_GT(fit.k_star, 0.0);
}

TEST(Claims, ReferenceSensitivityBound) {
  for (double eps : {0.1, 0.05, 0.02, 0.01}) {
    const auto p = fig2(eps);
    const double bound = 1.0 / p.beta + p.alpha / (2 * p.delta * 5.0);
    EXPECT_LE(max_reference_sensitivity(p, 5.0, p.reference_ceiling() - 5.0, 91), bound);
  }
}
