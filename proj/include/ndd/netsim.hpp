#pragma once

// Simulation of the stacked network ODE. Each subsystem receives
// r_i = G_i(y) from the prescribed edges and w = Delta(d) from the
// unintended map, both closed algebraically at every right-hand-side
// evaluation.

#include "ndd/characteristics.hpp"
#include "ndd/families.hpp"
#include "ndd/integrator.hpp"
#include "ndd/parallel.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ndd {

class NotConverged : public NumericalError {
 public:
  explicit NotConverged(const std::string& which, double horizon)
      : NumericalError(which + " run did not reach steady state within t = " + std::to_string(horizon)),
        horizon_(horizon) {}
  double horizon() const { return horizon_; }

 private:
  double horizon_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;  // stacked [x_1; x_2; ...]
  std::vector<Vector> y, d, w, r;
  std::vector<Vector> y_rate;  // dy/dt from the vector field
};

/// The network as one ODE over the stacked state.
class NetworkModel {
 public:
  explicit NetworkModel(const NetworkDescriptor& net) : net_(validate_network(net)) {
    std::size_t offset = 0;
    for (const auto& s : net_.subsystems) {
      dyn_.push_back(make_dynamics(s));
      offsets_.push_back(offset);
      offset += static_cast<std::size_t>(dyn_.back().dim());
    }
    dim_ = offset;
    coupling_ = net_.unintended.coefficients(static_cast<Eigen::Index>(net_.size()));
  }

  std::size_t size() const { return dyn_.size(); }
  std::size_t dim() const { return dim_; }
  const Dynamics& subsystem(std::size_t i) const { return dyn_[i]; }
  const NetworkDescriptor& descriptor() const { return net_; }

  Vector block(const Vector& x, std::size_t i) const {
    return x.segment(static_cast<Eigen::Index>(offsets_[i]), dyn_[i].dim());
  }

  struct Signals {
    Vector y, d, r, w;
  };

  Signals signals(const Vector& x, bool with_delta) const {
    const auto n = static_cast<Eigen::Index>(size());
    Signals s{Vector(n), Vector(n), Vector(n), Vector::Zero(n)};
    for (std::size_t i = 0; i < size(); ++i) {
      const Vector xi = block(x, i);
      s.y[static_cast<Eigen::Index>(i)] = dyn_[i].output_y(xi);
      s.d[static_cast<Eigen::Index>(i)] = dyn_[i].output_d(xi);
    }
    s.r = prescribed_inputs(net_, s.y);
    if (with_delta) s.w = coupling_ * s.d;
    return s;
  }

  void rhs(const Vector& x, bool with_delta, Vector& dx) const {
    const Signals s = signals(x, with_delta);
    dx.resize(static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      dx.segment(static_cast<Eigen::Index>(offsets_[i]), dyn_[i].dim()) = dyn_[i].rhs(block(x, i), s.r[k], s.w[k]);
    }
  }

  /// dy/dt along the flow, by a central difference of the output maps in
  /// the direction of the vector field.
  Vector output_rate(const Vector& x, const Vector& dx) const {
    Vector rate(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) {
      const Vector xi = block(x, i);
      const Vector vi = dx.segment(static_cast<Eigen::Index>(offsets_[i]), dyn_[i].dim());
      const double speed = vi.cwiseAbs().maxCoeff();
      if (speed == 0.0) {
        rate[static_cast<Eigen::Index>(i)] = 0.0;
        continue;
      }
      const double h = 1e-6 * (1.0 + xi.cwiseAbs().maxCoeff()) / speed;
      rate[static_cast<Eigen::Index>(i)] =
          (dyn_[i].output_y(xi + h * vi) - dyn_[i].output_y(xi - h * vi)) / (2.0 * h);
    }
    return rate;
  }

  Vector initial_state(const SimulationConfig& cfg) const {
    if (!cfg.initial_state) return Vector::Zero(static_cast<Eigen::Index>(dim_));
    if (cfg.initial_state->size() != dim_) {
      throw ValidationError({{ViolationCode::DimensionMismatch,
                              "initial state has " + std::to_string(cfg.initial_state->size()) +
                                  " entries, network state has " + std::to_string(dim_),
                              "simulation.initial_state"}});
    }
    return Eigen::Map<const Vector>(cfg.initial_state->data(), static_cast<Eigen::Index>(dim_));
  }

  double fastest_nu() const {
    double nu = std::numeric_limits<double>::infinity();
    for (const auto& d : dyn_)
      if (d.fast_dim > 0) nu = std::min(nu, d.nu);
    return std::isfinite(nu) ? nu : 1.0;
  }

 private:
  NetworkDescriptor net_;
  std::vector<Dynamics> dyn_;
  std::vector<std::size_t> offsets_;
  std::size_t dim_ = 0;
  Matrix coupling_;
};

namespace detail {

inline OdeOptions ode_options(const SimulationConfig& cfg, double nu) {
  OdeOptions o;
  o.solver = cfg.solver;
  o.rel_tol = cfg.rel_tol;
  o.abs_tol = cfg.abs_tol;
  o.fixed_step = cfg.fixed_step > 0 ? cfg.fixed_step : nu / 20.0;
  return o;
}

inline void append_segment(const NetworkModel& model, bool with_delta, const OdeSolution& sol, bool skip_first,
                           Trajectory& traj) {
  Vector dx;
  for (std::size_t k = skip_first ? 1 : 0; k < sol.times.size(); ++k) {
    const Vector& x = sol.states[k];
    const auto s = model.signals(x, with_delta);
    model.rhs(x, with_delta, dx);
    traj.times.push_back(sol.times[k]);
    traj.states.push_back(x);
    traj.y.push_back(s.y);
    traj.d.push_back(s.d);
    traj.w.push_back(s.w);
    traj.r.push_back(s.r);
    traj.y_rate.push_back(model.output_rate(x, dx));
  }
}

inline void extend(const NetworkModel& model, bool with_delta, const SimulationConfig& cfg, double t1,
                   Trajectory& traj) {
  const bool fresh = traj.times.empty();
  const double t0 = fresh ? 0.0 : traj.times.back();
  const Vector x0 = fresh ? model.initial_state(cfg) : traj.states.back();
  const OdeRhs f = [&](const Vector& x, double, Vector& dx) { model.rhs(x, with_delta, dx); };
  const std::size_t points = std::max<std::size_t>(cfg.output_points, 2);
  const auto sol = integrate_ode(f, x0, t0, linspace_times(t0, t1, points),
                                 ode_options(cfg, model.fastest_nu()));
  append_segment(model, with_delta, sol, !fresh, traj);
}

}  // namespace detail

/// Integrates the network over [0, cfg.t_final]. With `with_delta` false
/// the disturbance input is held at zero (nominal network).
inline Trajectory integrate_network(const NetworkDescriptor& net, const SimulationConfig& cfg, bool with_delta) {
  const NetworkModel model(net);
  Trajectory traj;
  detail::extend(model, with_delta, cfg, cfg.t_final, traj);
  return traj;
}

struct SteadyState {
  Vector y;
  bool converged = false;
  double worst_rate = std::numeric_limits<double>::infinity();  // max normalized |dy/dt| in the window
};

/// Converged when |dy/dt|/(1 + |y|) stays below the threshold over the
/// trailing window (a fraction of the simulated horizon). In very stiff runs
/// the vector field at stored states carries solver noise from the fast
/// states, so the mean drift over the window, max |y(t) - y(t_end)| divided
/// by the window length, is accepted as the rate too, but only while that
/// relative spread stays below 1e3 * threshold (an oscillation keeps its
/// amplitude however long the window gets).
inline SteadyState steady_state_output(const Trajectory& traj, const SimulationConfig& cfg) {
  SteadyState out;
  if (traj.times.empty()) return out;
  out.y = traj.y.back();
  const double t_end = traj.times.back();
  const double t_start = t_end - cfg.steady_state_window * (t_end - traj.times.front());
  std::size_t samples = 0;
  double worst = 0.0, spread = 0.0, first = t_end;
  const Vector scale = (1.0 + out.y.array().abs()).matrix();
  for (std::size_t k = traj.times.size(); k-- > 0;) {
    if (traj.times[k] < t_start) break;
    ++samples;
    first = traj.times[k];
    const Vector rel = traj.y_rate[k].cwiseAbs().cwiseQuotient((1.0 + traj.y[k].array().abs()).matrix());
    worst = std::max(worst, rel.size() ? rel.maxCoeff() : 0.0);
    const Vector moved = (traj.y[k] - out.y).cwiseAbs().cwiseQuotient(scale);
    spread = std::max(spread, moved.size() ? moved.maxCoeff() : 0.0);
  }
  const double drift = first < t_end ? spread / (t_end - first) : std::numeric_limits<double>::infinity();
  out.worst_rate = spread < 1e3 * cfg.steady_state_threshold ? std::min(worst, drift) : worst;
  out.converged = samples >= 2 && out.worst_rate < cfg.steady_state_threshold;
  return out;
}

struct SteadyRun {
  Trajectory trajectory;
  SteadyState steady;
  double horizon = 0.0;
  bool stalled = false;  // extension stopped because the window rate stopped falling
};

/// Integrates until steady state, doubling the horizon up to
/// 2^max_horizon_doublings times the configured one. Extension stops early
/// when two doublings in a row fail to halve the window rate, which is
/// what a limit cycle looks like.
inline SteadyRun run_to_steady_state(const NetworkDescriptor& net, const SimulationConfig& cfg, bool with_delta) {
  const NetworkModel model(net);
  SteadyRun run;
  double horizon = cfg.t_final;
  detail::extend(model, with_delta, cfg, horizon, run.trajectory);
  run.steady = steady_state_output(run.trajectory, cfg);
  std::vector<double> rates{run.steady.worst_rate};
  for (int k = 0; k < cfg.max_horizon_doublings && !run.steady.converged; ++k) {
    horizon *= 2.0;
    detail::extend(model, with_delta, cfg, horizon, run.trajectory);
    run.steady = steady_state_output(run.trajectory, cfg);
    rates.push_back(run.steady.worst_rate);
    const std::size_t m = rates.size();
    if (!run.steady.converged && m >= 3 && rates[m - 1] > 0.5 * rates[m - 3]) {
      run.stalled = true;
      break;
    }
  }
  run.horizon = horizon;
  return run;
}

struct NddRun {
  bool converged = false;
  double error = std::numeric_limits<double>::quiet_NaN();
  // max over the perturbed run's trailing window of ||y(t) - y_nominal||_inf;
  // meaningful even when the perturbed run oscillates.
  double trailing_sup = std::numeric_limits<double>::quiet_NaN();
  SteadyRun nominal, perturbed;
  std::string message;
};

/// Runs the nominal (w = 0) and perturbed (w = Delta(d)) networks to
/// steady state. Non-convergence is reported in the result, not thrown.
inline NddRun measure_ndd(const NetworkDescriptor& net, const SimulationConfig& cfg) {
  NddRun out;
  out.nominal = run_to_steady_state(net, cfg, false);
  if (!out.nominal.steady.converged) {
    out.message = NotConverged("nominal", out.nominal.horizon).what();
    return out;
  }
  out.perturbed = run_to_steady_state(net, cfg, true);
  const auto& tr = out.perturbed.trajectory;
  const double t_start = tr.times.back() - cfg.steady_state_window * (tr.times.back() - tr.times.front());
  double sup = 0.0;
  for (std::size_t k = 0; k < tr.times.size(); ++k)
    if (tr.times[k] >= t_start) sup = std::max(sup, (tr.y[k] - out.nominal.steady.y).cwiseAbs().maxCoeff());
  out.trailing_sup = sup;
  if (!out.perturbed.steady.converged) {
    out.message = NotConverged("perturbed", out.perturbed.horizon).what();
    return out;
  }
  const Vector diff = out.perturbed.steady.y - out.nominal.steady.y;
  out.error = diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0;
  out.converged = true;
  return out;
}

/// As measure_ndd, but throws NotConverged when either run fails to settle.
inline NddRun ndd_run(const NetworkDescriptor& net, const SimulationConfig& cfg) {
  NddRun out = measure_ndd(net, cfg);
  if (!out.nominal.steady.converged) throw NotConverged("nominal", out.nominal.horizon);
  if (!out.perturbed.steady.converged) throw NotConverged("perturbed", out.perturbed.horizon);
  return out;
}

/// ||y_ss(eps, Delta) - y_ss(eps, 0)||_inf.
inline double ndd_error(const NetworkDescriptor& net, const SimulationConfig& cfg) {
  return ndd_run(net, cfg).error;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { Epsilon, Nu, EpsilonAndNu, Reference };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Epsilon: return "epsilon";
    case SweepAxis::Nu: return "nu";
    case SweepAxis::EpsilonAndNu: return "epsilon-and-nu";
    case SweepAxis::Reference: return "reference";
  }
  return "unknown";
}

inline std::optional<SweepAxis> parse_sweep_axis(const std::string& s) {
  for (auto a : {SweepAxis::Epsilon, SweepAxis::Nu, SweepAxis::EpsilonAndNu, SweepAxis::Reference})
    if (s == to_string(a)) return a;
  return std::nullopt;
}

struct SweepRow {
  double axis_value = 0.0;
  double ndd_error = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  double seconds = 0.0;
  double trailing_sup = std::numeric_limits<double>::quiet_NaN();
  Vector y_nominal, y_perturbed;
  std::string message;  // error text when the point failed
};

struct SweepResult {
  SweepAxis axis = SweepAxis::Epsilon;
  std::string label;
  std::vector<SweepRow> rows;
};

/// Copy of `net` with the swept quantity set on every subsystem (or every
/// external reference edge for the reference axis).
inline NetworkDescriptor with_axis_value(NetworkDescriptor net, SweepAxis axis, double v) {
  switch (axis) {
    case SweepAxis::Epsilon:
      for (auto& s : net.subsystems) s.epsilon = v;
      break;
    case SweepAxis::Nu:
      for (auto& s : net.subsystems) s.nu = v;
      break;
    case SweepAxis::EpsilonAndNu:
      for (auto& s : net.subsystems) s.epsilon = s.nu = v;
      break;
    case SweepAxis::Reference:
      for (auto& e : net.edges)
        if (e.from == 0) e.r_star = v;
      break;
  }
  return net;
}

/// ndd_error at every grid point. Points run in parallel; rows stay in grid
/// order and failures are recorded rather than thrown.
inline SweepResult sweep(const NetworkDescriptor& net, SweepAxis axis, const std::vector<double>& grid,
                         const SimulationConfig& cfg = {}, const std::string& label = {}) {
  SweepResult out;
  out.axis = axis;
  out.label = label;
  out.rows = parallel_map(grid.size(), [&](std::size_t k) {
    SweepRow row;
    row.axis_value = grid[k];
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto run = measure_ndd(with_axis_value(net, axis, grid[k]), cfg);
      row.ndd_error = run.error;
      row.converged = run.converged;
      row.trailing_sup = run.trailing_sup;
      row.message = run.message;
      row.y_nominal = run.nominal.steady.y;
      row.y_perturbed = run.perturbed.steady.y;
    } catch (const std::exception& e) {
      row.message = e.what();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Single-subsystem runs

enum class SubsystemForm { Full, Reduced };

using Signal = std::function<double(double t)>;

inline Signal constant_signal(double v) {
  return [v](double) { return v; };
}

struct SubsystemRun {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<double> y;
};

/// Integrates one isolated subsystem under inputs r(t), w(t). The reduced
/// form evolves the slow states only, with the fast states on their
/// quasi-steady manifold.
inline SubsystemRun simulate_subsystem(const SubsystemDescriptor& sub, const Vector& x0, const Signal& r,
                                       const Signal& w, const SimulationConfig& cfg,
                                       SubsystemForm form = SubsystemForm::Full) {
  const Dynamics dyn = make_dynamics(sub);
  const bool reduced = form == SubsystemForm::Reduced;
  if (reduced && !dyn.reduced) throw Error("family " + dyn.family + " has no reduced model");
  const int n = reduced ? dyn.slow_dim : dyn.dim();
  if (x0.size() != n) {
    throw ValidationError({{ViolationCode::DimensionMismatch,
                            "initial state has " + std::to_string(x0.size()) + " entries, expected " +
                                std::to_string(n),
                            "subsystem " + std::to_string(sub.id)}});
  }
  OdeRhs f;
  if (reduced) {
    f = [&](const Vector& x, double t, Vector& dx) { dx = dyn.reduced->rhs(x, r(t), w(t)); };
  } else {
    f = [&](const Vector& x, double t, Vector& dx) { dx = dyn.rhs(x, r(t), w(t)); };
  }
  const auto sol = integrate_ode(f, x0, 0.0, linspace_times(0.0, cfg.t_final, std::max<std::size_t>(cfg.output_points, 2)),
                                 detail::ode_options(cfg, dyn.nu));
  SubsystemRun out;
  out.times = sol.times;
  out.states = sol.states;
  for (std::size_t k = 0; k < sol.states.size(); ++k) {
    if (reduced) {
      Vector full(dyn.dim());
      full << sol.states[k], dyn.reduced->fast_equilibrium(sol.states[k], r(sol.times[k]));
      out.y.push_back(dyn.output_y(full));
    } else {
      out.y.push_back(dyn.output_y(sol.states[k]));
    }
  }
  return out;
}

/// Largest |y_full(t) - y_reduced(t)| over the trailing window when both
/// forms start on the slow manifold at x0_slow and see the same inputs.
inline double reduction_gap(const SubsystemDescriptor& sub, const Vector& x0_slow, const Signal& r, const Signal& w,
                            const SimulationConfig& cfg) {
  const Dynamics dyn = make_dynamics(sub);
  if (!dyn.reduced) throw Error("family " + dyn.family + " has no reduced model");
  Vector x0(dyn.dim());
  x0 << x0_slow, dyn.reduced->fast_equilibrium(x0_slow, r(0.0));
  const auto full = simulate_subsystem(sub, x0, r, w, cfg, SubsystemForm::Full);
  const auto red = simulate_subsystem(sub, x0_slow, r, w, cfg, SubsystemForm::Reduced);
  const double t_start = cfg.t_final * (1.0 - cfg.steady_state_window);
  double gap = 0.0;
  for (std::size_t k = 0; k < full.times.size(); ++k)
    if (full.times[k] >= t_start) gap = std::max(gap, std::abs(full.y[k] - red.y[k]));
  return gap;
}

/// Integrates both initial conditions under the same constant inputs and
/// reports whether sigma_i (x_high_i - x_low_i) >= -tol holds at every
/// stored time. `sigma` defaults to the certified state order of the
/// chosen form, or all +1 when none is certified.
inline bool order_preservation_check(const SubsystemDescriptor& sub, const Vector& x0_low, const Vector& x0_high,
                                     double r, double w, const SimulationConfig& cfg,
                                     SubsystemForm form = SubsystemForm::Reduced,
                                     std::optional<SignVector> sigma = std::nullopt) {
  if (!sigma) {
    const Dynamics dyn = make_dynamics(sub);
    const auto mono = analyze_monotonicity(dyn);
    const MonotonicityVerdict* v = nullptr;
    if (form == SubsystemForm::Reduced && mono.reduced) v = &*mono.reduced;
    if (form == SubsystemForm::Full) v = &mono.full;
    if (v && v->monotone) {
      sigma = v->sigma_x;
    } else {
      sigma = SignVector::Ones(x0_low.size());
    }
  }
  const auto lo = simulate_subsystem(sub, x0_low, constant_signal(r), constant_signal(w), cfg, form);
  const auto hi = simulate_subsystem(sub, x0_high, constant_signal(r), constant_signal(w), cfg, form);
  for (std::size_t k = 0; k < lo.states.size(); ++k) {
    const Vector gap = hi.states[k] - lo.states[k];
    for (Eigen::Index i = 0; i < gap.size(); ++i) {
      const double tol = 1e-9 * (1.0 + std::abs(lo.states[k][i]) + std::abs(hi.states[k][i]));
      if ((*sigma)[i] * gap[i] < -tol) return false;
    }
  }
  return true;
}

}  // namespace ndd
