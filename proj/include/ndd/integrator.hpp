#pragma once

// ODE integration. The adaptive path starts with the Dormand-Prince 5(4)
// pair from Boost.odeint and switches to GSL's variable-order BDF once the
// accepted step size collapses (stiffness from small epsilon or nu). The
// fixed-step path takes constant steps with GSL's semi-implicit
// Bulirsch-Stoer method and exists as a cross-check.

#include "ndd/core_model.hpp"

#include <boost/numeric/odeint.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_odeiv2.h>

#include <memory>

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace ndd {

class NonFinite : public NumericalError {
 public:
  explicit NonFinite(double t)
      : NumericalError("state became non-finite at t = " + std::to_string(t)), t_(t) {}
  double time() const { return t_; }

 private:
  double t_;
};

class StepFloor : public NumericalError {
 public:
  explicit StepFloor(double t, double dt)
      : NumericalError(describe(t, dt)), t_(t) {}
  double time() const { return t_; }

 private:
  static std::string describe(double t, double dt) {
    std::ostringstream os;
    os << "step size fell to " << dt << " at t = " << t << " even with the implicit method";
    return os.str();
  }
  double t_;
};

/// dx/dt = f(x, t), written into `dxdt`.
using OdeRhs = std::function<void(const Vector& x, double t, Vector& dxdt)>;

struct OdeOptions {
  SolverKind solver = SolverKind::AdaptiveEmbedded;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double fixed_step = 1e-3;
  double initial_step = 0.0;   // 0 picks span * 1e-6
  std::size_t stiff_window = 50;
  double stiff_ratio = 1e-4;   // mean dt / span below this → implicit
  std::size_t explicit_step_cap = 100000;
  std::size_t max_steps = 20000000;
};

struct OdeSolution {
  std::vector<double> times;
  std::vector<Vector> states;
  std::size_t steps = 0;
  bool used_implicit = false;
};

namespace detail {

using SVec = std::vector<double>;

struct SystemAdapter {
  const OdeRhs* f;
  mutable Vector xe, de;

  void eval(const double* x, double* dxdt, std::size_t n, double t) const {
    const auto m = static_cast<Eigen::Index>(n);
    xe = Eigen::Map<const Vector>(x, m);
    de.resize(m);
    (*f)(xe, t, de);
    Eigen::Map<Vector>(dxdt, m) = de;
  }
  void operator()(const SVec& x, SVec& dxdt, double t) const { eval(x.data(), dxdt.data(), x.size(), t); }
};

struct GslContext {
  SystemAdapter* sys;
  std::size_t n;
};

inline int gsl_rhs(double t, const double y[], double dydt[], void* params) {
  auto* c = static_cast<GslContext*>(params);
  c->sys->eval(y, dydt, c->n, t);
  for (std::size_t i = 0; i < c->n; ++i)
    if (!std::isfinite(dydt[i])) return GSL_EBADFUNC;
  return GSL_SUCCESS;
}

/// Forward-difference Jacobian (row-major) and time derivative.
inline int gsl_jac(double t, const double y[], double* dfdy, double dfdt[], void* params) {
  auto* c = static_cast<GslContext*>(params);
  const std::size_t n = c->n;
  std::vector<double> x(y, y + n), f0(n), f1(n);
  c->sys->eval(x.data(), f0.data(), n, t);
  for (std::size_t j = 0; j < n; ++j) {
    const double xj = x[j];
    const double h = 1e-7 * (1.0 + std::abs(xj));
    x[j] = xj + h;
    c->sys->eval(x.data(), f1.data(), n, t);
    x[j] = xj;
    for (std::size_t i = 0; i < n; ++i) dfdy[i * n + j] = (f1[i] - f0[i]) / h;
  }
  const double ht = 1e-7 * (1.0 + std::abs(t));
  c->sys->eval(x.data(), f1.data(), n, t + ht);
  for (std::size_t i = 0; i < n; ++i) dfdt[i] = (f1[i] - f0[i]) / ht;
  return GSL_SUCCESS;
}

inline bool all_finite(const SVec& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

struct GslStepDeleter {
  void operator()(gsl_odeiv2_step* p) const { gsl_odeiv2_step_free(p); }
  void operator()(gsl_odeiv2_driver* p) const { gsl_odeiv2_driver_free(p); }
};

inline void silence_gsl() {
  static const bool once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

}  // namespace detail

/// Integrates from (t0, x0) and records the state at every entry of
/// `output_times` (increasing, each >= t0). Output times are hit exactly.
inline OdeSolution integrate_ode(const OdeRhs& f, const Vector& x0, double t0,
                                 const std::vector<double>& output_times, const OdeOptions& opt = {}) {
  namespace odeint = boost::numeric::odeint;
  using detail::SVec;
  detail::silence_gsl();

  OdeSolution sol;
  if (output_times.empty()) return sol;
  const double span = std::max(output_times.back() - t0, std::numeric_limits<double>::min());
  const std::size_t n = static_cast<std::size_t>(x0.size());

  detail::SystemAdapter sys{&f, {}, {}};
  detail::GslContext ctx{&sys, n};
  gsl_odeiv2_system gsys{detail::gsl_rhs, detail::gsl_jac, n, &ctx};
  SVec x(x0.data(), x0.data() + x0.size());
  double t = t0;
  auto record = [&](double target) {
    sol.times.push_back(target);
    sol.states.push_back(Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(n)));
  };

  if (opt.solver == SolverKind::FixedStep) {
    std::unique_ptr<gsl_odeiv2_step, detail::GslStepDeleter> step(
        gsl_odeiv2_step_alloc(gsl_odeiv2_step_bsimp, n));
    SVec err(n);
    for (double target : output_times) {
      while (t < target) {
        const double dt = std::min(opt.fixed_step, target - t);
        const int st = gsl_odeiv2_step_apply(step.get(), t, dt, x.data(), err.data(), nullptr, nullptr, &gsys);
        t = (target - t - dt <= 1e-14 * std::abs(target)) ? target : t + dt;
        ++sol.steps;
        if (st != GSL_SUCCESS || !detail::all_finite(x)) throw NonFinite(t);
      }
      record(target);
    }
    return sol;
  }

  auto explicit_stepper = odeint::make_controlled(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<SVec>());
  std::unique_ptr<gsl_odeiv2_driver, detail::GslStepDeleter> bdf;

  double dt = opt.initial_step > 0 ? opt.initial_step : span * 1e-6;
  bool implicit = false;
  std::deque<double> recent;
  double recent_sum = 0.0;
  std::size_t explicit_steps = 0;
  auto switch_to_implicit = [&] {
    implicit = true;
    sol.used_implicit = true;
    bdf.reset(gsl_odeiv2_driver_alloc_y_new(&gsys, gsl_odeiv2_step_msbdf, std::max(dt, span * 1e-12), opt.abs_tol,
                                            opt.rel_tol));
  };

  for (double target : output_times) {
    while (t < target) {
      if (sol.steps >= opt.max_steps) throw StepFloor(t, dt);
      if (implicit) {
        const int st = gsl_odeiv2_evolve_apply(bdf->e, bdf->c, bdf->s, &gsys, &t, target, &dt, x.data());
        ++sol.steps;
        if (st == GSL_EBADFUNC || !detail::all_finite(x)) throw NonFinite(t);
        if (st != GSL_SUCCESS) throw StepFloor(t, dt);
        continue;
      }
      const double remaining = target - t;
      bool clamped = false;
      double try_dt = dt;
      if (try_dt >= remaining) {
        try_dt = remaining;
        clamped = true;
      }
      const double t_before = t;
      const auto res = explicit_stepper.try_step(sys, x, t, try_dt);
      if (res == odeint::success) {
        ++sol.steps;
        if (!detail::all_finite(x)) throw NonFinite(t);
        if (clamped && std::abs(t - target) <= 1e-13 * std::max(1.0, std::abs(target))) t = target;
        const double taken = t - t_before;
        // try_dt now holds the suggested next step; keep the previous one
        // when this step was shortened to land on an output time.
        if (!clamped || try_dt > dt) dt = try_dt;
        ++explicit_steps;
        if (!clamped) {
          recent.push_back(taken);
          recent_sum += taken;
          if (recent.size() > opt.stiff_window) {
            recent_sum -= recent.front();
            recent.pop_front();
          }
        }
        const bool collapsed = recent.size() == opt.stiff_window &&
                               recent_sum / static_cast<double>(recent.size()) < opt.stiff_ratio * span;
        if (collapsed || explicit_steps >= opt.explicit_step_cap) switch_to_implicit();
      } else {
        dt = try_dt;
        if (!detail::all_finite(x)) throw NonFinite(t);
        if (dt < 1e-14 * std::max(1.0, std::abs(t))) {
          switch_to_implicit();
          dt = std::max(dt, span * 1e-10);
        }
      }
    }
    record(target);
  }
  return sol;
}

/// Evenly spaced output grid of `points` entries over [t0, t1].
inline std::vector<double> linspace_times(double t0, double t1, std::size_t points) {
  std::vector<double> out;
  if (points == 0) return out;
  if (points == 1) return {t1};
  out.reserve(points);
  for (std::size_t k = 0; k < points; ++k)
    out.push_back(t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(points - 1));
  out.back() = t1;
  return out;
}

}  // namespace ndd
