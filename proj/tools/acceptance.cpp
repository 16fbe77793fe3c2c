// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "ndd/ndd.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

namespace {

using namespace ndd;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit;  // seconds, 0 = none
  std::function<Outcome()> check;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

Vector uniform(int n, double r) { return Vector::Constant(n, r); }

SubsystemDescriptor srna_desc(double eps, double nu = 1.0) {
  SubsystemDescriptor s;
  s.id = 1;
  s.kind = SubsystemKind::SrnaFeedback;
  s.params = {{"alpha", 100}, {"lambda", 1}, {"beta", 1}, {"kappa", 1}, {"delta", 1}};
  s.epsilon = eps;
  s.nu = nu;
  return s;
}

SubsystemDescriptor linear_desc(double eps) {
  SubsystemDescriptor s;
  s.kind = SubsystemKind::LinearFeedbackExample;
  s.epsilon = eps;
  return s;
}

SubsystemDescriptor activated_gene(double c, double k) {
  SubsystemDescriptor s;
  s.kind = SubsystemKind::GenericOde;
  s.model = "activated-gene";
  s.params = {{"c", c}, {"k", k}, {"kd", 1.0}};
  s.epsilon = 0.1;
  return s;
}

gene::SrnaParams fig2(double eps) {
  gene::SrnaParams p;
  p.alpha = 100;
  p.epsilon = eps;
  return p;
}

IntervalBox box(const std::vector<double>& lo, const std::vector<double>& hi) {
  return IntervalBox(Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size())),
                     Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size())));
}

// Augmented field xi = (x, r, w) -> dx/dt.
VectorField augmented(const StateRhs& rhs, int n) {
  return [rhs, n](const Vector& xi) { return rhs(xi.head(n), xi[n], xi[n + 1]); };
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

fs::path scratch(const std::string& tag) {
  auto d = fs::temp_directory_path() / ("ndd_acceptance_" + tag);
  fs::remove_all(d);
  return d;
}

// ---------------------------------------------------------------------------

Outcome boundary() {
  const double b = uniform_reference_boundary(3, 100.0, 1.0, 1.0);
  const bool closed = std::abs(b - 100.0 / 3.0) <= 1e-12;
  const auto at = gene_admissible_set(independent_srna_network(3, b, 1e-3));
  const bool inside = gene_admissible_set(independent_srna_network(3, b * (1 - 1e-9), 1e-3)).member;
  const bool outside = !gene_admissible_set(independent_srna_network(3, b * (1 + 1e-9), 1e-3)).member;
  const auto lo = iterate_smallgain(independent_srna_network(3, 32.0, 1e-3), uniform(3, 32.0));
  const auto hi = iterate_smallgain(independent_srna_network(3, 35.0, 1e-3), uniform(3, 35.0));
  const bool flip = lo.certified() && hi.verdict == Verdict::Diverged;
  return {closed && std::abs(at.margin) < 1e-12 && inside && outside && flip,
          "boundary " + num(b) + ", margin at boundary " + num(at.margin) + ", r0=32 " + to_string(lo.verdict) +
              ", r0=35 " + to_string(hi.verdict)};
}

Outcome fixed_point() {
  const auto rep = iterate_smallgain(independent_srna_network(3, 10.0, 1e-3), uniform(3, 10.0));
  if (!rep.certified() || !rep.ultimate_box) return {false, "not certified"};
  // Scalar oracle: every subsystem sees the other two, w = 2 psi*(w, 10).
  const auto p = fig2(1e-3);
  double w = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double next = 2.0 * gene::psi_star_closed_form(w, 10.0, p);
    if (std::abs(next - w) < 1e-15) break;
    w = next;
  }
  double dev = 0.0, vs_oracle = 0.0;
  for (Eigen::Index i = 0; i < 3; ++i)
    for (double v : {rep.ultimate_box->lower()[i], rep.ultimate_box->upper()[i]}) {
      dev = std::max(dev, std::abs(v - 2.0 / 7.0));
      vs_oracle = std::max(vs_oracle, std::abs(v - w));
    }
  return {dev < 5e-2 && vs_oracle < 1e-6,
          "max |w - 2/7| = " + num(dev) + ", scalar oracle w* = " + num(w) + ", max |w - w*| = " + num(vs_oracle)};
}

Outcome eps_sweep_shape() {
  const auto dir = scratch("fig2b");
  RecipeOptions opt;
  opt.out_dir = dir.string();
  const auto res = run_recipe("fig2b", opt);
  fs::remove_all(dir);
  const auto r10 = res.group("r0=10");
  bool decreasing = r10.size() >= 2;
  for (std::size_t k = 0; k < r10.size(); ++k) {
    decreasing = decreasing && r10[k]->converged;
    if (k > 0) decreasing = decreasing && r10[k]->ndd_error < r10[k - 1]->ndd_error;
  }
  const double first = r10.front()->ndd_error, last = r10.back()->ndd_error;
  const double decades = std::log10(r10.front()->point.epsilon / r10.back()->point.epsilon);
  double best40 = INFINITY;
  for (const auto* p : res.group("r0=40"))
    if (p->converged) best40 = std::min(best40, p->ndd_error);
  return {decreasing && decades >= 3.0 - 1e-9 && last < 0.1 * first && best40 > 4.0,
          "r0=10 error " + num(first) + " -> " + num(last) + " over " + num(decades) +
              " decades, strictly decreasing " + (decreasing ? "yes" : "no") + "; r0=40 min error " + num(best40)};
}

Outcome closed_form() {
  double worst = 0.0;
  for (double eps : {0.1, 0.01, 0.001}) {
    const auto p = fig2(eps);
    const GainFunction g(make_dynamics(srna_desc(eps)));
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) {
        const double r = 5 + 90.0 * i / 9, w = 30.0 * j / 9;
        const double b = gene::psi_star_closed_form(w, r, p);
        worst = std::max(worst, std::abs(gain_psi_star(g, w, 0.0, r) - b) / (1 + b));
      }
  }
  return {worst <= 1e-8, "max relative gap " + num(worst) + " over 3 x 10 x 10 points"};
}

Outcome monotonicity() {
  const auto lin = analyze_monotonicity(make_dynamics(linear_desc(0.1)));
  const bool lin_ok = !lin.full.monotone && !lin.full.witness.empty();
  const auto srna = analyze_monotonicity(make_dynamics(srna_desc(0.05)));
  const bool srna_ok = srna.reduced && srna.reduced->monotone && srna.reduced->sigma_x[0] == 1 &&
                       srna.reduced->sigma_u[0] == 1 && srna.reduced->sigma_u[1] == -1;
  std::string d = "linear example: " + std::string(lin.full.monotone ? "monotone" : "negative cycle " +
                                                                                  lin.full.witness_text(lin.full_graph));
  d += "; sRNA reduced: " + std::string(srna_ok ? "monotone, orders (+1, -1; +1)" : "unexpected verdict");
  return {lin_ok && srna_ok, d};
}

Outcome decomposition_laws() {
  struct Family {
    std::string name;
    VectorField f;
    IntervalBox domain;
  };
  const Dynamics srna = make_dynamics(srna_desc(0.05));
  const Dynamics lin = make_dynamics(linear_desc(0.1));
  const Dynamics act = make_dynamics(activated_gene(0.5, 1.0));
  const std::vector<Family> families{
      {"srna-full", augmented(srna.rhs, 3), box({0, 0, 0, 0, 0}, {50, 50, 100, 95, 20})},
      {"srna-reduced", augmented(srna.reduced->rhs, 1), box({0, 0, 0}, {100, 95, 20})},
      {"linear-example", augmented(lin.rhs, 2), box({0, 0, 0, 0}, {10, 10, 10, 10})},
      {"activated-gene", augmented(act.rhs, 1), box({0, 0, 0}, {10, 10, 10})}};
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0, 1);
  std::size_t failures = 0, samples = 0;
  for (const auto& fam : families) {
    const auto pat = sample_sign_pattern(fam.f, fam.domain);
    const auto fh = canonical_decomposition(fam.f, pat.signs);
    for (const auto& x : quasi_random_points(fam.domain, 1000, 17)) {
      ++samples;
      const Vector fx = fam.f(x);
      const double tol = 1e-10 * (1 + fx.cwiseAbs().maxCoeff());
      Vector x2 = x, z = x;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double span = fam.domain.upper()[i] - fam.domain.lower()[i];
        x2[i] = std::min(fam.domain.upper()[i], x[i] + u(rng) * 0.2 * span);
        z[i] = fam.domain.lower()[i] + u(rng) * span;
      }
      const Vector inner = x + (x2 - x).cwiseProduct(Vector::NullaryExpr(x.size(), [&]() { return u(rng); }));
      const bool ok = (fh(x, x) - fx).cwiseAbs().maxCoeff() <= tol &&
                      (fh(x, z).array() <= fh(x2, z).array() + tol).all() &&
                      (fh(z, x2).array() <= fh(z, x).array() + tol).all() &&
                      box_propagate(fh, IntervalBox(x, x2)).contains(fam.f(inner), tol);
      failures += ok ? 0 : 1;
    }
  }
  return {failures == 0, std::to_string(samples) + " samples over " + std::to_string(families.size()) +
                             " families, " + std::to_string(failures) + " violations"};
}

Outcome equilibrium_oracle() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0.0, worst_gas = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double eps = std::pow(10.0, -1.0 - u(rng)), r = 5 + 85 * u(rng), w = 20 * u(rng);
    const Dynamics dyn = make_dynamics(srna_desc(eps));
    worst = std::max(worst, rel_diff(integrate_long(dyn, Vector::Zero(3), r, w, 60.0), solve_equilibrium(dyn, r, w)));
  }
  for (int k = 0; k < 20; ++k) {
    const double eps = std::pow(10.0, -2.0 * u(rng)), r = 10 * u(rng), w = 10 * u(rng);
    const Dynamics dyn = make_dynamics(linear_desc(eps));
    worst = std::max(worst, rel_diff(integrate_long(dyn, Vector::Zero(2), r, w, 60.0), solve_equilibrium(dyn, r, w)));
  }
  for (int k = 0; k < 20; ++k) {
    const Dynamics dyn = make_dynamics(activated_gene(u(rng), 0.5 + u(rng)));
    const double r = 10 * u(rng), w = 10 * u(rng);
    worst = std::max(worst, rel_diff(integrate_long(dyn, Vector::Zero(1), r, w, 80.0), solve_equilibrium(dyn, r, w)));
  }
  const std::vector<Dynamics> fams{make_dynamics(srna_desc(0.05)), make_dynamics(linear_desc(0.1)),
                                   make_dynamics(activated_gene(0.5, 1.0))};
  for (const auto& dyn : fams)
    for (int k = 0; k < 5; ++k) {
      const double r = 5 + 5 * u(rng), w = 5 * u(rng);
      const Vector a = (10.0 * Vector::NullaryExpr(dyn.dim(), [&]() { return u(rng); })).eval();
      const Vector b = (10.0 * Vector::NullaryExpr(dyn.dim(), [&]() { return u(rng); })).eval();
      worst_gas = std::max(worst_gas, rel_diff(integrate_long(dyn, a, r, w, 80.0), integrate_long(dyn, b, r, w, 80.0)));
    }
  return {worst < 1e-5 && worst_gas < 1e-5,
          "max Newton/integration gap " + num(worst) + " (60 instances), max two-start gap " + num(worst_gas)};
}

Outcome reduction() {
  SimulationConfig cfg;
  cfg.t_final = 40;
  cfg.output_points = 2001;
  cfg.steady_state_window = 0.25;
  const Signal r = [](double t) { return 10.0 + 5.0 * std::sin(t); };
  Vector x0(1);
  x0 << 10.0;
  double prev = INFINITY;
  bool decreasing = true;
  std::string d = "gap over nu {1, 0.3, 0.1, 0.03, 0.01}:";
  for (double nu : {1.0, 0.3, 0.1, 0.03, 0.01}) {
    const double gap = reduction_gap(srna_desc(0.01, nu), x0, r, constant_signal(0.0), cfg);
    decreasing = decreasing && gap < prev;
    prev = gap;
    d += " " + num(gap);
  }
  return {decreasing, d};
}

struct PanelSummary {
  bool certified = false;
  double min_error = INFINITY;
  Vector nominal;
};

PanelSummary panel(const std::string& name) {
  const auto dir = scratch(name);
  RecipeOptions opt;
  opt.out_dir = dir.string();
  const auto res = run_recipe(name, opt);
  fs::remove_all(dir);
  PanelSummary s;
  s.certified = !res.certificates.empty();
  for (const auto& [label, c] : res.certificates) s.certified = s.certified && c.report.certified();
  for (const auto& p : res.points)
    if (p.converged) {
      s.min_error = std::min(s.min_error, p.ndd_error);
      if (s.nominal.size() == 0) s.nominal = p.y_nominal;
    }
  return s;
}

Outcome cascade() {
  const auto b = panel("fig4b"), c = panel("fig4c");
  if (b.nominal.size() == 0 || c.nominal.size() == 0) return {false, "no converged grid point"};
  const bool b_ok = b.certified && (b.min_error < 0.05 * b.nominal.array()).all();
  const bool c_ok = !c.certified && (c.min_error > 0.2 * c.nominal.array()).any();
  return {b_ok && c_ok, "fig4b " + std::string(b.certified ? "certified" : "not certified") + ", min error " +
                            num(b.min_error) + " vs smallest output " + num(b.nominal.minCoeff()) + "; fig4c " +
                            (c.certified ? "certified" : "not certified") + ", min error " + num(c.min_error) +
                            " vs smallest output " + num(c.nominal.minCoeff())};
}

Outcome claims() {
  std::vector<double> rs;
  for (int k = 0; k < 19; ++k) rs.push_back(5 + 5.0 * k);
  const auto c1 = fit_nominal_error(fig2(0.1), rs, {0.1, 0.05, 0.02, 0.01});
  const auto c2 = fit_disturbance_error(fig2(0.1), rs, {1, 5, 20}, {0.1, 0.05, 0.02, 0.01, 1e-3, 1e-4, 1e-5},
                                        {0.005, 0.002, 3e-4, 3e-5});
  double worst3 = 0.0;
  for (double eps : {0.1, 0.05, 0.02, 0.01}) {
    const auto p = fig2(eps);
    const double bound = 1.0 / p.beta + p.alpha / (2 * p.delta * 5.0);
    worst3 = std::max(worst3, max_reference_sensitivity(p, 5.0, p.reference_ceiling() - 5.0, 91) / bound);
  }
  const bool ok1 = c1.exponent >= 0.9 && c1.exponent <= 1.1;
  const bool ok2 = c2.k_star > 0 && c2.max_ratio_on_check <= 1.0;
  return {ok1 && ok2 && worst3 <= 1.0, "nominal slope " + num(c1.exponent) + ", disturbance bound ratio " +
                                           num(c2.max_ratio_on_check) + " (k* " + num(c2.k_star) + ", K* " +
                                           num(c2.K_star) + "), sensitivity/bound " + num(worst3)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "admissible-set boundary and verdict flip", 5, boundary},
      {2, "DT fixed point", 1, fixed_point},
      {3, "eps-sweep shape (fig2b)", 600, eps_sweep_shape},
      {4, "closed-form vs composed gain", 10, closed_form},
      {5, "monotonicity verdicts", 5, monotonicity},
      {6, "decomposition-function laws", 0, decomposition_laws},
      {7, "equilibrium oracle equivalence", 0, equilibrium_oracle},
      {8, "two-timescale reduction gap", 0, reduction},
      {9, "cascade panels (fig4b/fig4c)", 1200, cascade},
      {10, "claim fits", 0, claims},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && secs > c.time_limit) {
      o.pass = false;
      o.detail += "; over time limit " + num(c.time_limit) + " s";
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2d %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
