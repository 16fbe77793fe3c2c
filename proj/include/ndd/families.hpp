#pragma once

// Uniform view of a subsystem family: full two-timescale vector field,
// output maps, reduced (slow) model and family-specific facts such as the
// nominal characteristic and the admissible reference interval.
//
// State layout is always [slow; fast]. For the sRNA family that is
// (p, m, s); for the linear feedback example it is (x, z).

#include "ndd/core_model.hpp"
#include "ndd/genecircuit.hpp"

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ndd {

using StateRhs = std::function<Vector(const Vector& state, double r, double w)>;
using OutputMap = std::function<double(const Vector& state)>;

/// Slow model obtained by placing the fast states on their quasi-steady
/// manifold z = gamma(x, r).
struct ReducedModel {
  StateRhs rhs;                                                 // dx/dt
  std::function<Vector(const Vector& x, double r)> fast_equilibrium;
  std::function<double(const Vector& x, double r, double w)> output_d;  // rho(x, gamma(x, r))
};

struct Dynamics {
  std::string family;
  int slow_dim = 1;
  int fast_dim = 0;
  double nu = 1.0;
  StateRhs rhs;  // d[slow; fast]/dt, fast rows already divided by nu
  OutputMap output_y;
  OutputMap output_d;
  IntervalBox state_domain;           // positively invariant region, may be unbounded
  std::pair<double, double> r_range;  // input region used for sampling
  std::pair<double, double> w_range;
  std::function<Vector(double r, double w)> seed;
  std::function<Vector(double r, double w)> alternate_seed;
  double time_scale = 1.0;  // slowest relaxation time of the isolated subsystem
  std::optional<ReducedModel> reduced;
  // Exact or bracketed equilibrium when the family admits one.
  std::function<Vector(double r, double w)> equilibrium;
  std::function<double(double r)> nominal;  // H(r), empty if unknown
  std::optional<std::pair<double, double>> admissible;

  int dim() const { return slow_dim + fast_dim; }
  Vector slow(const Vector& s) const { return s.head(slow_dim); }
};

// ---------------------------------------------------------------------------
// Generic ODE registry

/// A user-supplied subsystem. `rhs` returns [g_slow; g_fast] where the fast
/// rows are the nu-scaled derivatives (d fast/dt = g_fast / nu).
struct GenericModel {
  int slow_dim = 1;
  int fast_dim = 0;
  std::function<Vector(const Vector& state, double r, double w, const ParamMap& params, double eps)> rhs;
  std::function<double(const Vector& state, const ParamMap& params)> output_y;
  std::function<double(const Vector& state, const ParamMap& params)> output_d;
  std::function<Vector(double r, double w, const ParamMap& params, double eps)> seed;
  std::function<Vector(double r, double w, const ParamMap& params, double eps)> alternate_seed;
  std::function<double(double r, const ParamMap& params)> nominal;
  std::optional<IntervalBox> state_domain;
  std::pair<double, double> r_range{0.0, 10.0};
  std::pair<double, double> w_range{0.0, 10.0};
  double time_scale = 1.0;
};

class ModelRegistry {
 public:
  static ModelRegistry& instance() {
    static ModelRegistry reg;
    return reg;
  }

  void add(const std::string& name, GenericModel model) {
    std::lock_guard<std::mutex> lock(mu_);
    models_[name] = std::move(model);
  }

  std::optional<GenericModel> find(const std::string& name) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = models_.find(name);
    if (it == models_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> names() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<std::string> out;
    for (const auto& kv : models_) out.push_back(kv.first);
    return out;
  }

 private:
  ModelRegistry() { register_builtins(); }

  void register_builtins() {
    // First-order activated gene: x' = r/(1 + c w) - k x, y = x, d = x/kd.
    // Monotone with orders (r, w; x) = (+, -; +).
    GenericModel gene;
    gene.rhs = [](const Vector& s, double r, double w, const ParamMap& p, double) {
      Vector out(1);
      out << r / (1.0 + p.at("c") * w) - p.at("k") * s[0];
      return out;
    };
    gene.output_y = [](const Vector& s, const ParamMap&) { return s[0]; };
    gene.output_d = [](const Vector& s, const ParamMap& p) { return s[0] / p.at("kd"); };
    gene.state_domain = IntervalBox::nonnegative(1);
    gene.r_range = {0.0, 10.0};
    gene.w_range = {0.0, 10.0};
    models_["activated-gene"] = gene;

    // Self-activating switch with two stable equilibria for suitable (r, w):
    // x' = r + b x^2/(1 + x^2) - x.
    GenericModel bistable;
    bistable.rhs = [](const Vector& s, double r, double, const ParamMap& p, double) {
      const double x = s[0];
      Vector out(1);
      out << r + p.at("b") * x * x / (1.0 + x * x) - x;
      return out;
    };
    bistable.output_y = [](const Vector& s, const ParamMap&) { return s[0]; };
    bistable.output_d = [](const Vector& s, const ParamMap&) { return s[0]; };
    bistable.alternate_seed = [](double, double, const ParamMap& p, double) {
      Vector v(1);
      v << p.at("b") + 1.0;
      return v;
    };
    bistable.state_domain = IntervalBox::nonnegative(1);
    models_["bistable-switch"] = bistable;
  }

  mutable std::mutex mu_;
  std::map<std::string, GenericModel> models_;
};

inline void register_model(const std::string& name, GenericModel model) {
  ModelRegistry::instance().add(name, std::move(model));
}

// ---------------------------------------------------------------------------
// Family constructors

inline Dynamics srna_dynamics(const gene::SrnaParams& prm) {
  Dynamics d;
  d.family = "srna-feedback";
  d.slow_dim = 1;
  d.fast_dim = 2;
  d.nu = prm.nu;
  d.rhs = [prm](const Vector& x, double r, double w) {
    const auto f = gene::srna_rhs({x[1], x[2], x[0]}, r, w, prm);
    Vector out(3);
    out << f[2], f[0], f[1];
    return out;
  };
  d.output_y = [](const Vector& x) { return x[0]; };
  d.output_d = [prm](const Vector& x) { return x[1] / prm.kappa; };
  d.state_domain = IntervalBox::nonnegative(3);
  const double ceiling = prm.reference_ceiling();
  d.r_range = {0.0, ceiling};
  d.w_range = {0.0, 50.0};
  d.equilibrium = [prm](double r, double w) {
    const auto e = gene::full_equilibrium(r, w, prm);
    Vector out(3);
    out << e[2], e[0], e[1];
    return out;
  };
  d.seed = [prm](double r, double w) {
    // Nominal protein level, with RNA on the boundary-layer manifold.
    const double p0 = std::min(gene::nominal_output(r, prm), 0.999 * prm.alpha / prm.delta);
    const auto bl = gene::boundary_layer_equilibrium(p0, r, prm);
    Vector out(3);
    out << p0, bl.m, bl.s;
    (void)w;
    return out;
  };
  d.time_scale = 1.0 / prm.delta;
  ReducedModel red;
  red.rhs = [prm](const Vector& x, double r, double w) {
    Vector out(1);
    out << gene::reduced_rhs(x[0], r, w, prm);
    return out;
  };
  red.fast_equilibrium = [prm](const Vector& x, double r) {
    const auto bl = gene::boundary_layer_equilibrium(x[0], r, prm);
    Vector out(2);
    out << bl.m, bl.s;
    return out;
  };
  red.output_d = [prm](const Vector& x, double r, double) { return gene::reduced_disturbance(x[0], r, prm); };
  d.reduced = red;
  d.nominal = [prm](double r) { return gene::nominal_output(r, prm); };
  d.admissible = gene::default_admissible_interval(prm);
  return d;
}

/// Plant x' = -x + z + w with dynamic controller nu z' = -z + (r - x)/eps.
inline Dynamics linear_feedback_dynamics(double eps, double nu) {
  Dynamics d;
  d.family = "linear-feedback-example";
  d.slow_dim = 1;
  d.fast_dim = 1;
  d.nu = nu;
  d.rhs = [eps, nu](const Vector& x, double r, double w) {
    Vector out(2);
    out << -x[0] + x[1] + w, (-x[1] + (r - x[0]) / eps) / nu;
    return out;
  };
  d.output_y = [](const Vector& x) { return x[0]; };
  d.output_d = [](const Vector& x) { return x[1]; };
  d.state_domain = IntervalBox(Vector::Constant(2, -1e3), Vector::Constant(2, 1e3));
  d.r_range = {0.0, 10.0};
  d.w_range = {0.0, 10.0};
  d.equilibrium = [eps](double r, double w) {
    const double x = (r + eps * w) / (1.0 + eps);
    Vector out(2);
    out << x, x - w;
    return out;
  };
  d.seed = [](double r, double) {
    Vector out(2);
    out << r, 0.0;
    return out;
  };
  d.time_scale = 1.0;
  ReducedModel red;
  red.rhs = [eps](const Vector& x, double r, double w) {
    Vector out(1);
    out << -x[0] + (r - x[0]) / eps + w;
    return out;
  };
  red.fast_equilibrium = [eps](const Vector& x, double r) {
    Vector out(1);
    out << (r - x[0]) / eps;
    return out;
  };
  red.output_d = [eps](const Vector& x, double r, double) { return (r - x[0]) / eps; };
  d.reduced = red;
  d.nominal = [](double r) { return r; };
  d.admissible = std::make_pair(0.0, 10.0);
  return d;
}

inline Dynamics generic_dynamics(const SubsystemDescriptor& desc) {
  auto model = ModelRegistry::instance().find(desc.model);
  if (!model) {
    throw ValidationError({{ViolationCode::UnknownFamily,
                            "no generic-ode model registered under '" + desc.model + "'",
                            "subsystem " + std::to_string(desc.id)}});
  }
  const GenericModel m = *model;
  const ParamMap params = desc.params;
  const double eps = desc.epsilon, nu = desc.nu;
  Dynamics d;
  d.family = "generic-ode:" + desc.model;
  d.slow_dim = m.slow_dim;
  d.fast_dim = m.fast_dim;
  d.nu = nu;
  d.rhs = [m, params, eps, nu](const Vector& x, double r, double w) {
    Vector out = m.rhs(x, r, w, params, eps);
    out.tail(m.fast_dim) /= nu;
    return out;
  };
  d.output_y = [m, params](const Vector& x) { return m.output_y(x, params); };
  d.output_d = [m, params](const Vector& x) { return m.output_d(x, params); };
  d.state_domain = m.state_domain ? *m.state_domain : IntervalBox(Vector::Constant(d.dim(), -1e3), Vector::Constant(d.dim(), 1e3));
  d.r_range = m.r_range;
  d.w_range = m.w_range;
  const int dim = d.dim();
  d.seed = m.seed ? std::function<Vector(double, double)>([m, params, eps](double r, double w) { return m.seed(r, w, params, eps); })
                  : std::function<Vector(double, double)>([dim](double, double) { return Vector(Vector::Zero(dim)); });
  if (m.alternate_seed) {
    d.alternate_seed = [m, params, eps](double r, double w) { return m.alternate_seed(r, w, params, eps); };
  } else {
    d.alternate_seed = [dim](double, double) { return Vector(Vector::Constant(dim, 10.0)); };
  }
  d.time_scale = m.time_scale;
  if (m.nominal) d.nominal = [m, params](double r) { return m.nominal(r, params); };
  return d;
}

/// Builds the dynamics of a subsystem from its descriptor. Throws
/// ValidationError on unknown models or dimension mismatches.
inline Dynamics make_dynamics(const SubsystemDescriptor& desc) {
  Dynamics d;
  switch (desc.kind) {
    case SubsystemKind::SrnaFeedback: d = srna_dynamics(gene::SrnaParams::from_descriptor(desc)); break;
    case SubsystemKind::LinearFeedbackExample: d = linear_feedback_dynamics(desc.epsilon, desc.nu); break;
    case SubsystemKind::GenericOde: d = generic_dynamics(desc); break;
  }
  if ((desc.state_dim != 0 && desc.state_dim != d.slow_dim) ||
      (desc.fast_dim != 0 && desc.fast_dim != d.fast_dim)) {
    throw ValidationError({{ViolationCode::DimensionMismatch,
                            "declared dimensions (" + std::to_string(desc.state_dim) + ", " +
                                std::to_string(desc.fast_dim) + ") do not match family (" +
                                std::to_string(d.slow_dim) + ", " + std::to_string(d.fast_dim) + ")",
                            "subsystem " + std::to_string(desc.id)}});
  }
  if (desc.admissible_reference) d.admissible = desc.admissible_reference;
  return d;
}

}  // namespace ndd
