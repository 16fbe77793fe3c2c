#pragma once

// sRNA feedback-regulated genetic subsystem: full three-state kinetics,
// boundary-layer equilibrium, reduced slow model, ribosome competition and
// Hill regulation.

#include "ndd/core_model.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <utility>

namespace ndd::gene {

/// Kinetic parameters of one feedback-regulated subsystem.
///
/// alpha   translation rate constant (nM/hr)
/// lambda  mRNA/sRNA binding rate (1/(nM hr))
/// beta    sRNA production rate (1/hr)
/// kappa   ribosome dissociation constant (nM)
/// delta   protein decay (1/hr)
/// delta0  RNA decay (1/hr), only used by the delta0 form
/// epsilon design parameter
/// nu      timescale separation
struct SrnaParams {
  double alpha = 100.0;
  double lambda = 1.0;
  double beta = 1.0;
  double kappa = 1.0;
  double delta = 1.0;
  double delta0 = 1.0;
  double epsilon = 0.1;
  double nu = 1.0;

  bool valid() const {
    for (double v : {alpha, lambda, beta, kappa, delta, delta0, epsilon, nu})
      if (!(v > 0.0) || !std::isfinite(v)) return false;
    return true;
  }

  /// Upper end of the attainable reference range, alpha*beta/delta.
  double reference_ceiling() const { return alpha * beta / delta; }

  static SrnaParams from_descriptor(const SubsystemDescriptor& d) {
    SrnaParams p;
    p.alpha = d.param("alpha");
    p.lambda = d.param("lambda");
    p.beta = d.param("beta");
    p.kappa = d.param("kappa");
    p.delta = d.param("delta");
    p.delta0 = d.param_or("delta0", p.delta);
    p.epsilon = d.epsilon;
    p.nu = d.nu;
    return p;
  }
};

class DenominatorNearZero : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// T = alpha (m/kappa) / (1 + m/kappa + w)
inline double translation_rate(double m, double w, const SrnaParams& p) {
  const double q = m / p.kappa;
  return p.alpha * q / (1.0 + q + w);
}

/// Time derivative of (m, s, p) in the nu form.
inline std::array<double, 3> srna_rhs(const std::array<double, 3>& state, double r, double w,
                                      const SrnaParams& p) {
  const double m = state[0], s = state[1], pr = state[2];
  const double bind = p.lambda * m * s / p.epsilon;
  return {(r / p.epsilon - bind - p.delta * m) / p.nu,
          (p.beta * pr / p.epsilon - bind - p.delta * s) / p.nu,
          translation_rate(m, w, p) - p.delta * pr};
}

/// Time derivative of (m, s, p) in the delta0 form, where both RNA species
/// decay at rate delta0 and there is no explicit nu.
inline std::array<double, 3> srna_rhs_delta0(const std::array<double, 3>& state, double r, double w,
                                             const SrnaParams& p) {
  const double m = state[0], s = state[1], pr = state[2];
  const double bind = p.lambda * m * s / p.epsilon;
  return {r / p.epsilon - bind - p.delta0 * m, p.beta * pr / p.epsilon - bind - p.delta0 * s,
          translation_rate(m, w, p) - p.delta * pr};
}

/// Parameters of the nu form that reproduce a delta0-form subsystem:
/// nu = delta/delta0 and epsilon scaled by delta0/delta.
inline SrnaParams to_nu_form(const SrnaParams& p) {
  SrnaParams q = p;
  q.nu = p.delta / p.delta0;
  q.epsilon = p.epsilon * p.delta0 / p.delta;
  return q;
}

struct BoundaryLayerPoint {
  double m = 0.0;
  double s = 0.0;
};

/// Unique nonnegative equilibrium (m, s) of the fast RNA subsystem with the
/// protein level frozen at `pval`.
///
/// m solves lambda*eps*delta*m^2 - A*m - eps*delta*r = 0 (eliminating s),
/// with A = r lambda - beta lambda p - delta^2 eps^2. When A < 0 the
/// positive root is evaluated as 2 eps delta r / (S - A) to avoid
/// cancellation. s follows from the mRNA balance, or from the sRNA balance
/// when m = 0.
inline BoundaryLayerPoint boundary_layer_equilibrium(double pval, double r, const SrnaParams& p) {
  const double ed = p.epsilon * p.delta;
  const double A = r * p.lambda - p.beta * p.lambda * pval - ed * ed;
  const double S = std::sqrt(A * A + 4.0 * ed * ed * p.lambda * r);
  BoundaryLayerPoint out;
  if (A >= 0.0) {
    out.m = (A + S) / (2.0 * ed * p.lambda);
  } else {
    const double den = S - A;
    out.m = den > 0.0 ? 2.0 * ed * r / den : 0.0;
  }
  if (out.m > 0.0) {
    out.s = (r - ed * out.m) / (p.lambda * out.m);
  } else {
    out.s = p.beta * pval / ed;
  }
  return out;
}

/// Fast subsystem vector field in the stretched time t/nu, protein frozen.
inline std::array<double, 2> boundary_layer_rhs(double m, double s, double pval, double r,
                                                const SrnaParams& p) {
  const double bind = p.lambda * m * s / p.epsilon;
  return {r / p.epsilon - bind - p.delta * m, p.beta * pval / p.epsilon - bind - p.delta * s};
}

/// Reduced (slow) protein dynamics with the RNA species at their
/// boundary-layer equilibrium.
inline double reduced_rhs(double p_slow, double r, double w, const SrnaParams& p) {
  const double m = boundary_layer_equilibrium(p_slow, r, p).m;
  return translation_rate(m, w, p) - p.delta * p_slow;
}

/// Disturbance output of the reduced model, m(p, r)/kappa.
inline double reduced_disturbance(double p_slow, double r, const SrnaParams& p) {
  return boundary_layer_equilibrium(p_slow, r, p).m / p.kappa;
}

/// Protein equilibrium of the reduced model. The residual is strictly
/// decreasing in p and changes sign on [0, alpha/delta], so bisection to
/// machine precision is exact up to rounding.
inline double reduced_equilibrium(double r, double w, const SrnaParams& p) {
  if (r <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = p.alpha / p.delta;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (reduced_rhs(mid, r, w, p) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Full-model equilibrium (m, s, p). Shares the protein level of the
/// reduced model since nu does not enter the steady-state relations.
inline std::array<double, 3> full_equilibrium(double r, double w, const SrnaParams& p) {
  const double pe = reduced_equilibrium(r, w, p);
  const auto bl = boundary_layer_equilibrium(pe, r, p);
  return {bl.m, bl.s, pe};
}

/// Ribosome competition w_i = sum over j != i of d_j.
inline Vector competition_delta(const Vector& d) {
  return Vector::Constant(d.size(), d.sum()) - d;
}

inline double hill_interaction(double y_prev, double B, double k, double n) {
  return hill_activation(y_prev, B, k, n);
}

/// eta(r, w) = delta phi / (alpha - delta phi)
inline double eta(double r, double w, const SrnaParams& p) {
  const double dp = p.delta * reduced_equilibrium(r, w, p);
  return dp / (p.alpha - dp);
}

/// Limit of eta(r, 0) as epsilon goes to zero: delta r / (alpha beta - delta r).
inline double eta_star(double r, const SrnaParams& p) {
  return p.delta * r / (p.alpha * p.beta - p.delta * r);
}

/// Closed-form input/output gain of the reduced subsystem at reference r*,
/// delta phi (1 + w+) / (alpha - delta phi).
inline double psi_star_closed_form(double w_plus, double r_star, const SrnaParams& p) {
  const double dp = p.delta * reduced_equilibrium(r_star, w_plus, p);
  const double den = p.alpha - dp;
  if (den < 1e-9 * p.alpha) {
    throw DenominatorNearZero("alpha - delta*phi is " + std::to_string(den) + " at r* = " +
                              std::to_string(r_star));
  }
  return dp * (1.0 + w_plus) / den;
}

/// Default admissible reference interval [0.05, 0.95] * alpha beta / delta.
inline std::pair<double, double> default_admissible_interval(const SrnaParams& p) {
  const double c = p.reference_ceiling();
  return {0.05 * c, 0.95 * c};
}

/// Nominal output in the epsilon -> 0 limit, r / beta.
inline double nominal_output(double r, const SrnaParams& p) { return r / p.beta; }

}  // namespace ndd::gene
