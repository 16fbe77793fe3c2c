#pragma once

// Static characteristics of subsystems: equilibrium solving, static I/O
// maps, disturbance gain functions built from canonical decompositions,
// the nominal reference of a network and the asymptotic fits of the sRNA
// characteristic.

#include "ndd/core_model.hpp"
#include "ndd/families.hpp"
#include "ndd/genecircuit.hpp"
#include "ndd/integrator.hpp"
#include "ndd/monotone_analysis.hpp"

#include <Eigen/LU>

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ndd {

class NoConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class MultipleRoots : public NumericalError {
 public:
  MultipleRoots(Vector first, Vector second)
      : NumericalError("two seeds converged to distinct equilibria"),
        first_(std::move(first)),
        second_(std::move(second)) {}
  const Vector& first() const { return first_; }
  const Vector& second() const { return second_; }

 private:
  Vector first_, second_;
};

class NotMonotone : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Equilibria

struct EquilibriumOptions {
  double tol = 1e-10;
  int max_newton = 50;
  double fallback_horizon = 200.0;  // in units of the family time scale
  bool check_multiple = true;
};

/// Residual of the subsystem vector field in its unscaled form (fast rows
/// multiplied back by nu), so the tolerance does not depend on nu.
inline Vector equilibrium_residual(const Dynamics& dyn, const Vector& x, double r, double w) {
  Vector f = dyn.rhs(x, r, w);
  f.tail(dyn.fast_dim) *= dyn.nu;
  return f;
}

inline bool residual_ok(const Dynamics& dyn, const Vector& x, double r, double w, double tol) {
  if (!x.allFinite()) return false;
  const Vector f = equilibrium_residual(dyn, x, r, w);
  return f.allFinite() && f.cwiseAbs().maxCoeff() <= tol * (1.0 + x.cwiseAbs().maxCoeff());
}

namespace detail {

/// Damped Newton on the unscaled residual with a finite-difference
/// Jacobian. Returns the iterate when the residual test passes.
inline std::optional<Vector> damped_newton(const Dynamics& dyn, Vector x, double r, double w,
                                           const EquilibriumOptions& opt) {
  auto F = [&](const Vector& v) { return equilibrium_residual(dyn, v, r, w); };
  Vector f = F(x);
  double norm = f.cwiseAbs().maxCoeff();
  for (int it = 0; it < opt.max_newton; ++it) {
    if (residual_ok(dyn, x, r, w, opt.tol)) return x;
    Matrix J(x.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double h = 1e-7 * (1.0 + std::abs(x[j]));
      Vector a = x, b = x;
      a[j] += h;
      b[j] -= h;
      J.col(j) = (F(a) - F(b)) / (2.0 * h);
    }
    Eigen::PartialPivLU<Matrix> lu(J);
    const Vector step = lu.solve(-f);
    if (!step.allFinite()) return std::nullopt;
    double lambda = 1.0;
    bool improved = false;
    for (int half = 0; half < 40; ++half) {
      const Vector trial = x + lambda * step;
      const Vector ft = F(trial);
      const double nt = ft.allFinite() ? ft.cwiseAbs().maxCoeff() : std::numeric_limits<double>::infinity();
      if (nt < norm) {
        x = trial;
        f = ft;
        norm = nt;
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) break;
  }
  if (residual_ok(dyn, x, r, w, opt.tol)) return x;
  return std::nullopt;
}

inline std::optional<Vector> integrate_to_rest(const Dynamics& dyn, const Vector& x0, double r, double w,
                                               const EquilibriumOptions& opt) {
  OdeRhs f = [&](const Vector& x, double, Vector& dx) { dx = dyn.rhs(x, r, w); };
  OdeOptions oo;
  oo.rel_tol = 1e-10;
  oo.abs_tol = 1e-12;
  try {
    const auto sol = integrate_ode(f, x0, 0.0, {opt.fallback_horizon * dyn.time_scale}, oo);
    return damped_newton(dyn, sol.states.back(), r, w, opt);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

inline std::optional<Vector> solve_from(const Dynamics& dyn, const Vector& seed, double r, double w,
                                        const EquilibriumOptions& opt) {
  if (auto x = damped_newton(dyn, seed, r, w, opt)) return x;
  return integrate_to_rest(dyn, seed, r, w, opt);
}

}  // namespace detail

/// Equilibrium state [slow; fast] of the isolated subsystem under constant
/// inputs (r, w). Families with a bracketed solution use it and polish with
/// Newton; others run damped Newton from the family seed, falling back to
/// long-horizon integration. For generic families a second seed is tried
/// and distinct roots raise MultipleRoots.
inline Vector solve_equilibrium(const Dynamics& dyn, double r, double w, const EquilibriumOptions& opt = {}) {
  if (dyn.equilibrium) {
    Vector x = dyn.equilibrium(r, w);
    if (residual_ok(dyn, x, r, w, opt.tol)) return x;
    if (auto polished = detail::damped_newton(dyn, x, r, w, opt)) return *polished;
    throw NoConvergence("equilibrium residual above tolerance at r = " + std::to_string(r) +
                        ", w = " + std::to_string(w));
  }
  auto x = detail::solve_from(dyn, dyn.seed(r, w), r, w, opt);
  if (!x) {
    throw NoConvergence("Newton and long-horizon integration both failed at r = " + std::to_string(r) +
                        ", w = " + std::to_string(w));
  }
  if (opt.check_multiple && dyn.alternate_seed) {
    if (auto y = detail::solve_from(dyn, dyn.alternate_seed(r, w), r, w, opt)) {
      const double scale = 1.0 + std::max(x->cwiseAbs().maxCoeff(), y->cwiseAbs().maxCoeff());
      if ((*x - *y).cwiseAbs().maxCoeff() > 1e-6 * scale) throw MultipleRoots(*x, *y);
    }
  }
  return *x;
}

inline Vector solve_equilibrium(const SubsystemDescriptor& sub, double r, double w,
                                const EquilibriumOptions& opt = {}) {
  return solve_equilibrium(make_dynamics(sub), r, w, opt);
}

struct StaticIO {
  double y = 0.0;
  double d = 0.0;
  Vector state;
  double residual = 0.0;
};

inline StaticIO static_io(const Dynamics& dyn, double r, double w) {
  StaticIO out;
  out.state = solve_equilibrium(dyn, r, w);
  out.y = dyn.output_y(out.state);
  out.d = dyn.output_d(out.state);
  out.residual = equilibrium_residual(dyn, out.state, r, w).cwiseAbs().maxCoeff();
  return out;
}

inline StaticIO static_io(const SubsystemDescriptor& sub, double r, double w) {
  return static_io(make_dynamics(sub), r, w);
}

// ---------------------------------------------------------------------------
// Monotonicity of a subsystem

/// Monotonicity verdict for the full vector field and, when the family
/// provides one, for its reduced slow model.
struct SubsystemMonotonicity {
  SignPattern full_pattern;
  IncidenceGraph full_graph;
  MonotonicityVerdict full;
  std::optional<SignPattern> reduced_pattern;
  std::optional<IncidenceGraph> reduced_graph;
  std::optional<MonotonicityVerdict> reduced;
  bool sampled_unbounded = false;

  /// Orders of the model the small-gain argument uses: the full model when
  /// it is monotone, otherwise the reduced one.
  const MonotonicityVerdict* certified() const {
    if (full.monotone) return &full;
    if (reduced && reduced->monotone) return &*reduced;
    return nullptr;
  }
  bool via_reduction() const { return !full.monotone && reduced && reduced->monotone; }
};

namespace detail {

inline IntervalBox input_augmented_domain(const IntervalBox& states, const Dynamics& dyn) {
  Vector lo(states.dim() + 2), hi(states.dim() + 2);
  lo << states.lower(), dyn.r_range.first, dyn.w_range.first;
  hi << states.upper(), dyn.r_range.second, dyn.w_range.second;
  return IntervalBox(lo, hi);
}

inline IntervalBox slow_domain(const Dynamics& dyn) {
  return IntervalBox(dyn.state_domain.lower().head(dyn.slow_dim), dyn.state_domain.upper().head(dyn.slow_dim));
}

inline std::vector<std::string> node_labels(int slow, int fast) {
  std::vector<std::string> out;
  for (int i = 0; i < slow; ++i) out.push_back("x" + std::to_string(i + 1));
  for (int i = 0; i < fast; ++i) out.push_back("z" + std::to_string(i + 1));
  out.push_back("r");
  out.push_back("w");
  return out;
}

}  // namespace detail

inline SubsystemMonotonicity analyze_monotonicity(const Dynamics& dyn, const SamplingOptions& opt = {}) {
  SubsystemMonotonicity out;
  const int n = dyn.dim();
  VectorField full = [&dyn, n](const Vector& xi) { return dyn.rhs(xi.head(n), xi[n], xi[n + 1]); };
  out.full_pattern = sample_sign_pattern(full, detail::input_augmented_domain(dyn.state_domain, dyn), opt);
  out.full_graph = build_incidence_graph(out.full_pattern, detail::node_labels(dyn.slow_dim, dyn.fast_dim));
  out.full = detect_negative_undirected_cycle(out.full_graph);
  out.sampled_unbounded = out.full_pattern.sampled_unbounded;
  if (dyn.reduced && dyn.fast_dim > 0) {
    const int ns = dyn.slow_dim;
    const auto red = dyn.reduced->rhs;
    VectorField f = [red, ns](const Vector& xi) { return red(xi.head(ns), xi[ns], xi[ns + 1]); };
    out.reduced_pattern = sample_sign_pattern(f, detail::input_augmented_domain(detail::slow_domain(dyn), dyn), opt);
    out.reduced_graph = build_incidence_graph(*out.reduced_pattern, detail::node_labels(dyn.slow_dim, 0));
    out.reduced = detect_negative_undirected_cycle(*out.reduced_graph);
    out.sampled_unbounded = out.sampled_unbounded || out.reduced_pattern->sampled_unbounded;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gain functions

/// Disturbance I/O gain of a monotone (or reduced-monotone) subsystem,
/// psi(u+, u-) = rho_hat(phi_hat(u+, u-), u+, phi_hat(u-, u+), u-), built by
/// composing canonical decompositions of the static I/S characteristic phi
/// and of the disturbance output rho(x, r, w).
class GainFunction {
 public:
  GainFunction(Dynamics dyn, const SamplingOptions& opt = {}) : dyn_(std::move(dyn)) {
    monotonicity_ = analyze_monotonicity(dyn_, opt);
    const MonotonicityVerdict* v = monotonicity_.certified();
    if (v == nullptr) {
      throw NotMonotone("subsystem '" + dyn_.family + "' is not monotone, directly or after reduction");
    }
    // States entering phi and rho: the slow states when reducing, all of
    // them when the full model is monotone.
    const bool reduce = monotonicity_.via_reduction();
    const int ns = reduce ? dyn_.slow_dim : dyn_.dim();
    // phi: (r, w) -> equilibrium state, sign pattern sigma_x sigma_u^T.
    const SignMatrix lambda_phi = v->sigma_x.head(ns) * v->sigma_u.transpose();
    auto dyn_ptr = std::make_shared<Dynamics>(dyn_);
    VectorField phi = [dyn_ptr, ns](const Vector& u) {
      return Vector(solve_equilibrium(*dyn_ptr, u[0], u[1]).head(ns));
    };
    phi_hat_ = canonical_decomposition(phi, lambda_phi);

    // rho: (x, r, w) -> d, on the reduced manifold when reducing.
    VectorField rho;
    if (reduce) {
      const auto red = dyn_.reduced->output_d;
      rho = [red, ns](const Vector& xi) {
        Vector o(1);
        o << red(xi.head(ns), xi[ns], xi[ns + 1]);
        return o;
      };
    } else {
      const auto out = dyn_.output_d;
      rho = [out, ns](const Vector& xi) {
        Vector o(1);
        o << out(xi.head(ns));
        return o;
      };
    }
    const IntervalBox states = reduce ? detail::slow_domain(dyn_) : dyn_.state_domain;
    SamplingOptions ro = opt;
    ro.seed = opt.seed + 1;
    rho_pattern_ = sample_sign_pattern(rho, detail::input_augmented_domain(states, dyn_), ro);
    rho_hat_ = canonical_decomposition(rho, rho_pattern_.signs);

    // g(u) = [phi(u); u] has decomposition g_hat(u+, u-) = [phi_hat(u+, u-); u+].
    DecompositionFunction g_hat;
    g_hat.in_dim = 2;
    g_hat.out_dim = ns + 2;
    const auto ph = phi_hat_;
    g_hat.fn = [ph, ns](const Vector& up, const Vector& um) {
      Vector o(ns + 2);
      o << ph(up, um), up;
      return o;
    };
    psi_hat_ = compose_decompositions(rho_hat_, g_hat);
  }

  /// psi((r+, w+), (r-, w-)).
  double psi(double r_plus, double w_plus, double r_minus, double w_minus) const {
    Vector up(2), um(2);
    up << r_plus, w_plus;
    um << r_minus, w_minus;
    return psi_hat_(up, um)[0];
  }

  /// psi*(w+, w-; r*) = psi((r*, w+), (r*, w-)).
  double psi_star(double w_plus, double w_minus, double r_star) const {
    return psi(r_star, w_plus, r_star, w_minus);
  }

  const SubsystemMonotonicity& monotonicity() const { return monotonicity_; }
  const SignPattern& rho_pattern() const { return rho_pattern_; }
  const Dynamics& dynamics() const { return dyn_; }

 private:
  Dynamics dyn_;
  SubsystemMonotonicity monotonicity_;
  DecompositionFunction phi_hat_;
  SignPattern rho_pattern_;
  DecompositionFunction rho_hat_;
  DecompositionFunction psi_hat_;
};

inline double gain_psi(const GainFunction& g, double r_plus, double w_plus, double r_minus, double w_minus) {
  return g.psi(r_plus, w_plus, r_minus, w_minus);
}

inline double gain_psi_star(const GainFunction& g, double w_plus, double w_minus, double r_star) {
  return g.psi_star(w_plus, w_minus, r_star);
}

// ---------------------------------------------------------------------------
// Nominal characteristic and reference

struct NominalEstimate {
  double value = 0.0;
  bool extrapolated = false;  // true when estimated numerically
};

/// H(r): the family formula when known, else Richardson extrapolation of
/// h(r, 0; eps) over eps, eps/2, eps/4 starting from the descriptor's eps.
inline NominalEstimate nominal_output(const SubsystemDescriptor& sub, double r) {
  const Dynamics dyn = make_dynamics(sub);
  if (dyn.nominal) return {dyn.nominal(r), false};
  auto h = [&](double eps) {
    SubsystemDescriptor s = sub;
    s.epsilon = eps;
    return static_io(make_dynamics(s), r, 0.0).y;
  };
  const double e = sub.epsilon;
  const double h1 = h(e), h2 = h(e / 2), h4 = h(e / 4);
  // Two Richardson levels assuming an expansion in integer powers of eps.
  const double r1 = 2 * h2 - h1, r2 = 2 * h4 - h2;
  return {(4 * r2 - r1) / 3, true};
}

/// Prescribed input of subsystem `i` (0-based) given outputs y of all
/// subsystems: sum of incoming edge contributions.
inline double prescribed_input(const NetworkDescriptor& net, std::size_t i, const Vector& y) {
  double r = 0.0;
  for (const auto& e : net.edges) {
    if (e.to != static_cast<int>(i) + 1) continue;
    const double src = e.from == 0 ? 0.0 : y[e.from - 1];
    r += e.evaluate(src);
  }
  return r;
}

inline Vector prescribed_inputs(const NetworkDescriptor& net, const Vector& y) {
  Vector r(static_cast<Eigen::Index>(net.size()));
  for (std::size_t i = 0; i < net.size(); ++i) r[static_cast<Eigen::Index>(i)] = prescribed_input(net, i, y);
  return r;
}

/// Nominal reference r*: forward pass in index order (edges only point
/// forward), r*_i = sum of incoming G terms at y*_j = H_j(r*_j).
inline Vector nominal_reference(const NetworkDescriptor& net) {
  validate_network(net);
  const auto n = static_cast<Eigen::Index>(net.size());
  Vector r = Vector::Zero(n), y = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r[i] = prescribed_input(net, static_cast<std::size_t>(i), y);
    y[i] = nominal_output(net.subsystems[static_cast<std::size_t>(i)], r[i]).value;
  }
  return r;
}

inline Vector nominal_outputs(const NetworkDescriptor& net) {
  const Vector r = nominal_reference(net);
  Vector y(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i)
    y[i] = nominal_output(net.subsystems[static_cast<std::size_t>(i)], r[i]).value;
  return y;
}

// ---------------------------------------------------------------------------
// Asymptotic fits of the sRNA characteristic

struct LinearRateFit {
  double constant = 0.0;  // K* with error <= K* eps on the fit set
  double exponent = 0.0;  // slope of log error against log eps
  double max_ratio_on_check = 0.0;  // max error/(K* eps) on held-out points
};

namespace detail {

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += std::log(x[k]);
    my += std::log(y[k]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
    sxx += (std::log(x[k]) - mx) * (std::log(x[k]) - mx);
  }
  return sxy / sxx;
}

}  // namespace detail

/// |h(r, 0; eps) - r/beta| <= K* eps over r_grid x eps_grid, with a pooled
/// log-log regression of the error against eps.
inline LinearRateFit fit_nominal_error(const gene::SrnaParams& base, const std::vector<double>& r_grid,
                                       const std::vector<double>& eps_grid) {
  LinearRateFit fit;
  std::vector<double> xs, ys;
  for (double eps : eps_grid) {
    gene::SrnaParams p = base;
    p.epsilon = eps;
    for (double r : r_grid) {
      const double err = std::abs(gene::reduced_equilibrium(r, 0.0, p) - gene::nominal_output(r, p));
      fit.constant = std::max(fit.constant, err / eps);
      if (err > 0) {
        xs.push_back(eps);
        ys.push_back(err);
      }
    }
  }
  fit.exponent = xs.size() >= 2 ? detail::loglog_slope(xs, ys) : 0.0;
  return fit;
}

struct DisturbanceFit {
  double k_star = 0.0;  // slope in w
  double K_star = 0.0;  // offset
  double max_ratio_on_check = 0.0;
};

/// Fits |h(r, w; eps) - h(r, 0; eps)| <= eps (k* w + K*) on `fit_eps` and
/// reports the worst ratio error / bound on `check_eps`.
inline DisturbanceFit fit_disturbance_error(const gene::SrnaParams& base, const std::vector<double>& r_grid,
                                            const std::vector<double>& w_grid, const std::vector<double>& fit_eps,
                                            const std::vector<double>& check_eps) {
  auto err = [&](double r, double w, double eps) {
    gene::SrnaParams p = base;
    p.epsilon = eps;
    return std::abs(gene::reduced_equilibrium(r, w, p) - gene::reduced_equilibrium(r, 0.0, p)) / eps;
  };
  // Dominating line: slope from the largest-w samples, then the smallest
  // offset that puts every sample under it.
  DisturbanceFit fit;
  std::vector<std::array<double, 2>> samples;
  for (double eps : fit_eps)
    for (double r : r_grid)
      for (double w : w_grid) samples.push_back({w, err(r, w, eps)});
  double wmax = 0;
  for (const auto& s : samples) wmax = std::max(wmax, s[0]);
  for (const auto& s : samples)
    if (s[0] == wmax && wmax > 0) fit.k_star = std::max(fit.k_star, s[1] / wmax);
  for (const auto& s : samples) fit.K_star = std::max(fit.K_star, s[1] - fit.k_star * s[0]);
  for (double eps : check_eps)
    for (double r : r_grid)
      for (double w : w_grid)
        fit.max_ratio_on_check = std::max(fit.max_ratio_on_check, err(r, w, eps) / (fit.k_star * w + fit.K_star));
  return fit;
}

/// Largest finite-difference slope dh/dr over r in [lo, hi] (w = 0).
inline double max_reference_sensitivity(const gene::SrnaParams& p, double lo, double hi, int points) {
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    const double r = lo + (hi - lo) * k / (points - 1);
    const double h = 1e-5 * (1 + r);
    const double a = std::max(lo, r - h), b = std::min(hi, r + h);
    const double s = (gene::reduced_equilibrium(b, 0.0, p) - gene::reduced_equilibrium(a, 0.0, p)) / (b - a);
    worst = std::max(worst, s);
  }
  return worst;
}

}  // namespace ndd
