#pragma once

// Small-gain certificate: the discrete-time interval iteration on
// disturbance bounds, an empirical Lyapunov-decrease check of its orbit, a
// perturbation probe, the analytic admissible set of the sRNA family, and
// the combined network verdict.

#include "ndd/characteristics.hpp"
#include "ndd/families.hpp"
#include "ndd/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ndd {

class Inconclusive : public NumericalError {
 public:
  explicit Inconclusive(std::size_t k)
      : NumericalError("small-gain iteration neither settled nor diverged after " + std::to_string(k) +
                       " steps") {}
};

class DivergedAtP : public NumericalError {
 public:
  explicit DivergedAtP(double p)
      : NumericalError("perturbed small-gain iteration diverged at p = " + std::to_string(p)), p_(p) {}
  double p() const { return p_; }

 private:
  double p_;
};

class MissingDisturbanceBound : public Error {
 public:
  MissingDisturbanceBound()
      : Error("network has non-sRNA subsystems and no disturbance_bound to seed the iteration") {}
};

/// Names of the structural hypotheses checked by certify_ndd.
namespace precondition {
inline constexpr const char* kMonotone = "subsystem-monotonicity";
inline constexpr const char* kDag = "dag-prescribed-map";
inline constexpr const char* kCooperative = "cooperative-unintended-map";
inline constexpr const char* kAdmissible = "reference-admissible";
inline constexpr const char* kBounded = "dt-bounded-epsilon-independent";
}  // namespace precondition

/// Results the verdict can rest on.
namespace grounds {
inline constexpr const char* kMonotoneSmallGain = "monotone-small-gain";
inline constexpr const char* kTwoTimescale = "two-timescale-small-gain";
inline constexpr const char* kGeneAdmissible = "gene-admissible-set";
}  // namespace grounds

struct DtState {
  Vector w_minus;
  Vector w_plus;
  std::size_t k = 0;
};

struct SmallGainOptions {
  std::size_t k_max = 10000;
  double blowup = 1e9;
  std::size_t settle_steps = 50;
  double settle_rel = 1e-9;
  // Re-run at eps/10 and call the run diverged when the box radius grows by
  // more than this factor: a box that scales with 1/eps is not an
  // eps-independent attractor.
  bool epsilon_probe = true;
  double probe_growth = 1.1;
  // Additive perturbation p (L1 |w| + L2) on each update, for the probe.
  double perturbation = 0.0;
  double L1 = 1.0, L2 = 1.0;
  std::optional<Vector> w0_plus;  // overrides the a-priori bound
};

struct SmallGainRun {
  CertificateReport report;
  std::vector<DtState> trace;
  std::size_t settled_at = 0;  // first step of the final settled streak
};

/// Per-subsystem gain functions at fixed eps, plus the linear unintended map.
class SmallGainProblem {
 public:
  explicit SmallGainProblem(const NetworkDescriptor& net, const SamplingOptions& opt = {})
      : net_(validate_network(net)) {
    coupling_ = net_.unintended.coefficients(static_cast<Eigen::Index>(net_.size()));
    for (const auto& s : net_.subsystems) gains_.push_back(std::make_shared<GainFunction>(make_dynamics(s), opt));
  }

  const NetworkDescriptor& network() const { return net_; }
  const Matrix& coupling() const { return coupling_; }
  const GainFunction& gain(std::size_t i) const { return *gains_[i]; }
  std::size_t size() const { return gains_.size(); }

  bool all_srna() const {
    return std::all_of(net_.subsystems.begin(), net_.subsystems.end(),
                       [](const SubsystemDescriptor& s) { return s.kind == SubsystemKind::SrnaFeedback; });
  }

  /// Initial box (w0-, w0+). sRNA networks use the attractive bound
  /// m_j <= r*_j / eps_j on the RNA, pushed through Delta; other networks
  /// use the symmetric user bound.
  std::pair<Vector, Vector> initial_box(const Vector& r_star) const {
    const auto n = static_cast<Eigen::Index>(size());
    if (all_srna()) {
      Vector dmax(n);
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto& s = net_.subsystems[static_cast<std::size_t>(j)];
        dmax[j] = r_star[j] / (s.epsilon * s.param("kappa"));
      }
      return {Vector::Zero(n), coupling_ * dmax};
    }
    if (!net_.disturbance_bound) throw MissingDisturbanceBound();
    const double b = *net_.disturbance_bound;
    return {Vector::Constant(n, -b), Vector::Constant(n, b)};
  }

  /// One step of the interval map: d-(k) = psi*(w-, w+), d+(k) = psi*(w+, w-),
  /// then w = Delta(d).
  std::pair<Vector, Vector> step(const Vector& wm, const Vector& wp, const Vector& r_star) const {
    const auto n = static_cast<Eigen::Index>(size());
    Vector dm(n), dp(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& g = gain(static_cast<std::size_t>(i));
      dm[i] = g.psi_star(wm[i], wp[i], r_star[i]);
      dp[i] = g.psi_star(wp[i], wm[i], r_star[i]);
    }
    return {coupling_ * dm, coupling_ * dp};
  }

 private:
  NetworkDescriptor net_;
  Matrix coupling_;
  std::vector<std::shared_ptr<GainFunction>> gains_;
};

namespace detail {

inline bool box_settled(const DtState& a, const DtState& b, double rel) {
  const double scale = 1.0 + std::max(b.w_minus.cwiseAbs().maxCoeff(), b.w_plus.cwiseAbs().maxCoeff());
  const double change = std::max((a.w_minus - b.w_minus).cwiseAbs().maxCoeff(),
                                 (a.w_plus - b.w_plus).cwiseAbs().maxCoeff());
  return change <= rel * scale;
}

inline NetworkDescriptor scale_epsilon(NetworkDescriptor net, double factor) {
  for (auto& s : net.subsystems) s.epsilon *= factor;
  return net;
}

inline NetworkDescriptor set_epsilon(NetworkDescriptor net, double eps) {
  for (auto& s : net.subsystems) s.epsilon = eps;
  return net;
}

}  // namespace detail

/// Iterates the interval map from (w0-, w0+) without the eps probe.
inline SmallGainRun run_smallgain(const SmallGainProblem& prob, const Vector& r_star, const SmallGainOptions& opt = {}) {
  SmallGainRun run;
  const auto n = static_cast<Eigen::Index>(prob.size());
  if (r_star.size() != n) {
    throw ValidationError({{ViolationCode::DimensionMismatch,
                            "r* has " + std::to_string(r_star.size()) + " entries for " + std::to_string(n) +
                                " subsystems",
                            "r_star"}});
  }
  auto [wm, wp] = prob.initial_box(r_star);
  if (opt.w0_plus) wp = *opt.w0_plus;
  run.trace.push_back({wm, wp, 0});
  const bool nonneg = prob.all_srna();
  std::size_t streak = 0;
  auto& rep = run.report;
  for (std::size_t k = 1; k <= opt.k_max; ++k) {
    auto [nm, np] = prob.step(wm, wp, r_star);
    if (opt.perturbation > 0.0) {
      nm.array() -= opt.perturbation * (opt.L1 * wm.array().abs() + opt.L2);
      np.array() += opt.perturbation * (opt.L1 * wp.array().abs() + opt.L2);
      if (nonneg) nm = nm.cwiseMax(0.0);
    }
    wm = nm;
    wp = np;
    run.trace.push_back({wm, wp, k});
    rep.iterations_used = k;
    const double size = std::max(wm.cwiseAbs().maxCoeff(), wp.cwiseAbs().maxCoeff());
    if (!std::isfinite(size) || size > opt.blowup) {
      rep.verdict = Verdict::Diverged;
      rep.reasons.push_back("iterate exceeded " + std::to_string(opt.blowup) + " at step " + std::to_string(k));
      return run;
    }
    if (detail::box_settled(run.trace[k - 1], run.trace[k], opt.settle_rel)) {
      if (streak++ == 0) run.settled_at = k;
    } else {
      streak = 0;
    }
    if (streak >= opt.settle_steps) {
      rep.verdict = Verdict::CertifiedBounded;
      IntervalBox box = IntervalBox(run.trace[run.settled_at].w_minus.cwiseMin(run.trace[run.settled_at].w_plus),
                                    run.trace[run.settled_at].w_plus.cwiseMax(run.trace[run.settled_at].w_minus));
      for (std::size_t j = run.settled_at + 1; j < run.trace.size(); ++j)
        box = box.hull(IntervalBox(run.trace[j].w_minus.cwiseMin(run.trace[j].w_plus),
                                   run.trace[j].w_plus.cwiseMax(run.trace[j].w_minus)));
      rep.ultimate_box = box;
      return run;
    }
  }
  rep.verdict = Verdict::Inconclusive;
  rep.reasons.push_back(Inconclusive(opt.k_max).what());
  return run;
}

/// Runs the iteration for `net` at its own eps and, when it settles, again
/// with every eps divided by 10 to check the box does not scale with 1/eps.
/// Inconclusive runs throw.
inline SmallGainRun iterate_smallgain_run(const NetworkDescriptor& net, const Vector& r_star,
                                          const SmallGainOptions& opt = {}) {
  const SmallGainProblem prob(net);
  SmallGainRun run = run_smallgain(prob, r_star, opt);
  if (run.report.verdict == Verdict::Inconclusive) throw Inconclusive(opt.k_max);
  if (run.report.certified() && opt.epsilon_probe) {
    const SmallGainProblem fine(detail::scale_epsilon(net, 0.1));
    SmallGainOptions o = opt;
    o.w0_plus.reset();
    const SmallGainRun probe = run_smallgain(fine, r_star, o);
    const double base = run.report.ultimate_box->radius();
    const bool grew = !probe.report.certified() ||
                      probe.report.ultimate_box->radius() > opt.probe_growth * std::max(base, 1e-12);
    if (grew) {
      run.report.verdict = Verdict::Diverged;
      std::ostringstream os;
      os << "ultimate box radius " << base << " grows to "
         << (probe.report.ultimate_box ? probe.report.ultimate_box->radius()
                                       : std::numeric_limits<double>::infinity())
         << " at eps/10";
      run.report.reasons.push_back(os.str());
    }
  }
  return run;
}

inline CertificateReport iterate_smallgain(const NetworkDescriptor& net, const Vector& r_star,
                                           const SmallGainOptions& opt = {}) {
  return iterate_smallgain_run(net, r_star, opt).report;
}

// ---------------------------------------------------------------------------
// Empirical exponential ultimate boundedness

struct ExponentialBound {
  bool bounded = false;
  double r_star_estimate = 0.0;  // decrease holds for every |w(k)| above this
  double decrease_margin = 0.0;  // largest c with V(k+1) - V(k) <= -c |w(k)|^2 there
};

/// Observed-decrease test with V(k) = |w(k)|^2 on an arbitrary sequence.
inline ExponentialBound empirical_exponential_ub(const std::vector<Vector>& w) {
  ExponentialBound out;
  if (w.empty()) return out;
  double r0 = 0.0;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    const double v0 = w[k].squaredNorm(), v1 = w[k + 1].squaredNorm();
    if (v1 - v0 >= 0.0 && v0 > 0.0) r0 = std::max(r0, std::sqrt(v0));
  }
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    const double v0 = w[k].squaredNorm();
    if (v0 == 0.0 || std::sqrt(v0) <= r0) continue;
    c = std::min(c, (v0 - w[k + 1].squaredNorm()) / v0);
  }
  out.r_star_estimate = r0;
  out.decrease_margin = std::isfinite(c) ? c : 0.0;
  // Ultimately bounded on the record: the second half never leaves the
  // ball reached by the first half.
  const std::size_t half = w.size() / 2;
  double first = 0.0, second = 0.0;
  for (std::size_t k = 0; k <= half; ++k) first = std::max(first, w[k].norm());
  for (std::size_t k = half + 1; k < w.size(); ++k) second = std::max(second, w[k].norm());
  out.bounded = second <= first * (1.0 + 1e-9) + 1e-12;
  return out;
}

/// Same test on a small-gain trace, using the stacked vector (w-, w+).
inline ExponentialBound empirical_exponential_ub(const std::vector<DtState>& trace) {
  std::vector<Vector> w;
  w.reserve(trace.size());
  for (const auto& s : trace) {
    Vector v(s.w_minus.size() + s.w_plus.size());
    v << s.w_minus, s.w_plus;
    w.push_back(v);
  }
  return empirical_exponential_ub(w);
}

/// Largest c with V(k+1) - V(k) <= -c |w(k)|^2 for every |w(k)| >= radius.
inline double decrease_margin_above(const std::vector<Vector>& w, double radius) {
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    const double v0 = w[k].squaredNorm();
    if (v0 == 0.0 || std::sqrt(v0) < radius) continue;
    c = std::min(c, (v0 - w[k + 1].squaredNorm()) / v0);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Perturbation probe

struct ProbeRow {
  double p = 0.0;
  IntervalBox box;
  double inflation = 0.0;  // how far the box reaches beyond the unperturbed one
};

struct RobustnessProbe {
  std::vector<ProbeRow> rows;
  double kappa = 0.0;       // least-squares slope of inflation against p
  bool at_most_linear = false;
};

/// Re-runs the iteration with the perturbation p (L1 |w| + L2) injected at
/// every step. Throws DivergedAtP for the smallest p that loses the bound.
inline RobustnessProbe perturbed_robustness_probe(const NetworkDescriptor& net, const Vector& r_star,
                                                  std::vector<double> p_levels, const SmallGainOptions& base = {}) {
  auto run_at = [&](double p) {
    SmallGainOptions o = base;
    o.perturbation = p;
    try {
      return iterate_smallgain_run(net, r_star, o);
    } catch (const Inconclusive& e) {
      SmallGainRun r;
      r.report.verdict = Verdict::Inconclusive;
      r.report.reasons.push_back(e.what());
      return r;
    }
  };
  const auto nominal = run_at(0.0);
  if (!nominal.report.certified()) throw Error("nominal small-gain iteration is not certified-bounded");
  const IntervalBox& b0 = *nominal.report.ultimate_box;
  std::sort(p_levels.begin(), p_levels.end());
  RobustnessProbe out;
  for (double p : p_levels) {
    ProbeRow row;
    row.p = p;
    if (p == 0.0) {
      row.box = b0;
    } else {
      const auto run = run_at(p);
      if (!run.report.certified()) throw DivergedAtP(p);
      row.box = *run.report.ultimate_box;
      row.inflation = std::max(0.0, std::max((b0.lower() - row.box.lower()).maxCoeff(),
                                             (row.box.upper() - b0.upper()).maxCoeff()));
    }
    out.rows.push_back(row);
  }
  double num = 0.0, den = 0.0, min_ratio = std::numeric_limits<double>::infinity(), max_ratio = 0.0;
  for (const auto& r : out.rows) {
    num += r.p * r.inflation;
    den += r.p * r.p;
    if (r.p > 0.0) {
      min_ratio = std::min(min_ratio, r.inflation / r.p);
      max_ratio = std::max(max_ratio, r.inflation / r.p);
    }
  }
  out.kappa = den > 0.0 ? num / den : 0.0;
  // Inflation per unit p may not grow by more than 25% across the range.
  out.at_most_linear = max_ratio <= 1.25 * min_ratio || max_ratio == 0.0 || !std::isfinite(min_ratio);
  return out;
}

// ---------------------------------------------------------------------------
// Analytic admissible set of the sRNA family

struct AdmissibleSetSpec {
  std::vector<double> alpha, beta, delta;
  Vector r_star;
  Vector network_sum;     // per i: sum_{j != i} eta*_j(r*_j), weighted by Delta
  double margin = 0.0;    // 1 - max_i network_sum_i
  std::vector<std::size_t> outside_rbar;
  bool member = false;
  std::vector<std::string> reasons;

  /// eta*_j(r) = delta_j r / (alpha_j beta_j - delta_j r).
  double eta_star(std::size_t j, double r) const { return delta[j] * r / (alpha[j] * beta[j] - delta[j] * r); }
};

inline constexpr const char* kReferenceOutsideRbar = "ReferenceOutsideRbar";

/// Evaluates the admissible-set condition at the nominal reference of an
/// all-sRNA network (or at an explicit r*).
inline AdmissibleSetSpec gene_admissible_set(const NetworkDescriptor& net, std::optional<Vector> r_star = std::nullopt) {
  validate_network(net);
  AdmissibleSetSpec out;
  for (const auto& s : net.subsystems) {
    if (s.kind != SubsystemKind::SrnaFeedback) {
      throw ValidationError({{ViolationCode::UnknownFamily, "admissible set is defined for sRNA subsystems only",
                              "subsystem " + std::to_string(s.id)}});
    }
    out.alpha.push_back(s.param("alpha"));
    out.beta.push_back(s.param("beta"));
    out.delta.push_back(s.param("delta"));
  }
  out.r_star = r_star ? *r_star : nominal_reference(net);
  const std::size_t n = net.size();
  const Matrix M = net.unintended.coefficients(static_cast<Eigen::Index>(n));
  out.network_sum = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Dynamics dyn = make_dynamics(net.subsystems[i]);
    const auto [lo, hi] = dyn.admissible.value_or(std::make_pair(0.0, 0.0));
    const double r = out.r_star[static_cast<Eigen::Index>(i)];
    if (!(r >= lo && r <= hi)) {
      out.outside_rbar.push_back(i);
      std::ostringstream os;
      os << kReferenceOutsideRbar << ": r*_" << i + 1 << " = " << r << " outside [" << lo << ", " << hi << "]";
      out.reasons.push_back(os.str());
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double mij = M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (j == i || mij == 0.0) continue;
      const double r = out.r_star[static_cast<Eigen::Index>(j)];
      const double den = out.alpha[j] * out.beta[j] - out.delta[j] * r;
      sum += den > 0.0 ? mij * out.eta_star(j, r) : std::numeric_limits<double>::infinity();
    }
    out.network_sum[static_cast<Eigen::Index>(i)] = sum;
  }
  out.margin = n == 0 ? 1.0 : 1.0 - out.network_sum.maxCoeff();
  if (out.margin <= 0.0) {
    std::ostringstream os;
    os << "network gain sum " << out.network_sum.maxCoeff() << " >= 1";
    out.reasons.push_back(os.str());
  }
  out.member = out.outside_rbar.empty() && out.margin > 0.0;
  return out;
}

/// Boundary r0 of the uniform reference r* = r0 * 1 for identical sRNA
/// subsystems under resource competition: (N - 1) delta r / (alpha beta -
/// delta r) = 1, i.e. r0 = alpha beta / (N delta).
inline double uniform_reference_boundary(std::size_t count, double alpha, double beta, double delta) {
  return alpha * beta / (static_cast<double>(count) * delta);
}

// ---------------------------------------------------------------------------
// Network verdict

struct CertifyOptions {
  std::vector<double> epsilon_ladder{1e-1, 1e-2, 1e-3};  // decreasing
  double ladder_tolerance = 0.10;
  SmallGainOptions smallgain;
};

struct LadderRung {
  double epsilon = 0.0;
  CertificateReport report;
};

struct NddCertificate {
  CertificateReport report;
  Vector r_star;
  std::vector<LadderRung> ladder;
  std::optional<AdmissibleSetSpec> admissible;
  std::vector<std::pair<std::string, bool>> checks;  // precondition -> passed
  std::vector<std::string> monotonicity_notes;
};

namespace detail {

inline void fail(NddCertificate& c, const char* name, const std::string& why) {
  c.report.reasons.push_back(std::string(name) + ": " + why);
}

}  // namespace detail

/// Full pipeline: monotonicity of each subsystem, DAG and cooperativity,
/// r* inside each admissible interval, the small-gain iteration across an
/// eps ladder, and the analytic condition for sRNA networks.
inline NddCertificate certify_ndd_detailed(const NetworkDescriptor& net, const CertifyOptions& opt = {}) {
  NddCertificate cert;
  auto& rep = cert.report;
  rep.verdict = Verdict::Inconclusive;

  // Structural checks.
  const auto violations = network_violations(net);
  bool dag_ok = true, coop_ok = true, other_ok = true;
  for (const auto& v : violations) {
    if (v.code == ViolationCode::EdgeNotForward) {
      dag_ok = false;
      detail::fail(cert, precondition::kDag, v.message + " (" + v.location + ")");
    } else if (v.code == ViolationCode::NonCooperativeDelta || v.code == ViolationCode::NonzeroDeltaDiagonal) {
      coop_ok = false;
      detail::fail(cert, precondition::kCooperative, v.message + " (" + v.location + ")");
    } else {
      other_ok = false;
      rep.reasons.push_back(std::string("invalid network: ") + v.message + " (" + v.location + ")");
    }
  }
  cert.checks.push_back({precondition::kDag, dag_ok});
  cert.checks.push_back({precondition::kCooperative, coop_ok});
  if (!dag_ok || !coop_ok || !other_ok) return cert;

  // Monotonicity.
  bool mono_ok = true, any_reduced = false;
  for (const auto& s : net.subsystems) {
    const auto m = analyze_monotonicity(make_dynamics(s));
    if (!m.certified()) {
      mono_ok = false;
      detail::fail(cert, precondition::kMonotone, "subsystem " + std::to_string(s.id) + " is not monotone");
    } else if (m.via_reduction()) {
      any_reduced = true;
      cert.monotonicity_notes.push_back("subsystem " + std::to_string(s.id) + ": monotone after reduction");
    } else {
      cert.monotonicity_notes.push_back("subsystem " + std::to_string(s.id) + ": monotone");
    }
  }
  cert.checks.push_back({precondition::kMonotone, mono_ok});
  if (!mono_ok) return cert;

  // Reference admissibility.
  cert.r_star = nominal_reference(net);
  bool adm_ok = true;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const Dynamics dyn = make_dynamics(net.subsystems[i]);
    const double r = cert.r_star[static_cast<Eigen::Index>(i)];
    if (dyn.admissible && !(r >= dyn.admissible->first && r <= dyn.admissible->second)) {
      adm_ok = false;
      std::ostringstream os;
      os << "r*_" << i + 1 << " = " << r << " outside [" << dyn.admissible->first << ", " << dyn.admissible->second
         << "]";
      detail::fail(cert, precondition::kAdmissible, os.str());
    }
  }
  cert.checks.push_back({precondition::kAdmissible, adm_ok});

  // Analytic condition for sRNA networks.
  const bool gene = !net.subsystems.empty() &&
                    std::all_of(net.subsystems.begin(), net.subsystems.end(), [](const SubsystemDescriptor& s) {
                      return s.kind == SubsystemKind::SrnaFeedback;
                    });
  if (gene) {
    cert.admissible = gene_admissible_set(net, cert.r_star);
    rep.admissible_set_membership = cert.admissible->member;
    rep.contraction_margin = cert.admissible->margin;
    if (!cert.admissible->member)
      for (const auto& why : cert.admissible->reasons) rep.reasons.push_back(std::string("admissible set: ") + why);
  }

  // Small-gain iteration across the eps ladder.
  cert.ladder = parallel_map(opt.epsilon_ladder.size(), [&](std::size_t k) {
    LadderRung rung;
    rung.epsilon = opt.epsilon_ladder[k];
    try {
      rung.report = iterate_smallgain(detail::set_epsilon(net, rung.epsilon), cert.r_star, opt.smallgain);
    } catch (const Inconclusive& e) {
      rung.report.verdict = Verdict::Inconclusive;
      rung.report.reasons.push_back(e.what());
    }
    return rung;
  });
  bool dt_ok = !cert.ladder.empty();
  double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0, rmax = 0.0;
  std::optional<double> prev_radius;
  for (const auto& rung : cert.ladder) {
    rep.iterations_used += rung.report.iterations_used;
    if (!rung.report.certified()) {
      dt_ok = false;
      std::ostringstream os;
      os << "eps = " << rung.epsilon << ": " << to_string(rung.report.verdict);
      for (const auto& why : rung.report.reasons) os << "; " << why;
      detail::fail(cert, precondition::kBounded, os.str());
      continue;
    }
    const IntervalBox& box = *rung.report.ultimate_box;
    dmin = std::min(dmin, box.diameter());
    dmax = std::max(dmax, box.diameter());
    rmax = std::max(rmax, box.radius());
    // Smaller eps may move the box by O(eps) but must not enlarge it.
    if (prev_radius && box.radius() > (1.0 + opt.ladder_tolerance) * *prev_radius + 1e-9) {
      dt_ok = false;
      std::ostringstream os;
      os << "ultimate box radius grows from " << *prev_radius << " to " << box.radius() << " at eps = " << rung.epsilon;
      detail::fail(cert, precondition::kBounded, os.str());
    }
    prev_radius = box.radius();
  }
  if (dt_ok && dmax - dmin > opt.ladder_tolerance * dmax + 1e-6 * (1.0 + rmax)) {
    dt_ok = false;
    std::ostringstream os;
    os << "ultimate box diameter varies from " << dmin << " to " << dmax << " across the eps ladder";
    detail::fail(cert, precondition::kBounded, os.str());
  }
  cert.checks.push_back({precondition::kBounded, dt_ok});
  if (dt_ok) {
    IntervalBox hull = *cert.ladder.front().report.ultimate_box;
    for (const auto& rung : cert.ladder) hull = hull.hull(*rung.report.ultimate_box);
    rep.ultimate_box = hull;
  }

  const bool analytic_ok = !gene || cert.admissible->member;
  if (gene && dt_ok != cert.admissible->member) {
    rep.reasons.push_back(std::string("analytic admissible-set verdict (") +
                          (cert.admissible->member ? "member" : "not member") +
                          ") disagrees with the small-gain iteration");
  }
  if (adm_ok && dt_ok && analytic_ok) {
    rep.verdict = Verdict::CertifiedBounded;
    rep.grounds.push_back(any_reduced ? grounds::kTwoTimescale : grounds::kMonotoneSmallGain);
    if (gene) rep.grounds.push_back(grounds::kGeneAdmissible);
  } else if (!dt_ok) {
    const bool diverged = std::any_of(cert.ladder.begin(), cert.ladder.end(), [](const LadderRung& r) {
      return r.report.verdict == Verdict::Diverged;
    });
    rep.verdict = diverged || !adm_ok || !analytic_ok ? Verdict::Diverged : Verdict::Inconclusive;
  } else {
    rep.verdict = Verdict::Diverged;
  }
  return cert;
}

inline CertificateReport certify_ndd(const NetworkDescriptor& net, const CertifyOptions& opt = {}) {
  return certify_ndd_detailed(net, opt).report;
}

// ---------------------------------------------------------------------------
// Report serialization

inline nlohmann::json to_json(const IntervalBox& b) {
  return {{"lower", std::vector<double>(b.lower().data(), b.lower().data() + b.dim())},
          {"upper", std::vector<double>(b.upper().data(), b.upper().data() + b.dim())}};
}

inline nlohmann::json to_json(const CertificateReport& r) {
  nlohmann::json j;
  j["verdict"] = to_string(r.verdict);
  j["certified"] = r.certified();
  j["iterations_used"] = r.iterations_used;
  j["ultimate_box"] = r.ultimate_box ? to_json(*r.ultimate_box) : nlohmann::json(nullptr);
  j["contraction_margin"] = r.contraction_margin ? nlohmann::json(*r.contraction_margin) : nlohmann::json(nullptr);
  j["admissible_set_membership"] =
      r.admissible_set_membership ? nlohmann::json(*r.admissible_set_membership) : nlohmann::json(nullptr);
  j["reasons"] = r.reasons;
  j["grounds"] = r.grounds;
  return j;
}

inline nlohmann::json to_json(const NddCertificate& c) {
  nlohmann::json j = to_json(c.report);
  j["r_star"] = std::vector<double>(c.r_star.data(), c.r_star.data() + c.r_star.size());
  nlohmann::json checks = nlohmann::json::object();
  for (const auto& [name, ok] : c.checks) checks[name] = ok;
  j["preconditions"] = checks;
  j["monotonicity"] = c.monotonicity_notes;
  nlohmann::json ladder = nlohmann::json::array();
  for (const auto& rung : c.ladder) {
    nlohmann::json e = to_json(rung.report);
    e["epsilon"] = rung.epsilon;
    ladder.push_back(e);
  }
  j["epsilon_ladder"] = ladder;
  if (c.admissible) {
    const auto& a = *c.admissible;
    j["admissible_set"] = {{"member", a.member},
                           {"margin", a.margin},
                           {"network_sum", std::vector<double>(a.network_sum.data(),
                                                               a.network_sum.data() + a.network_sum.size())},
                           {"reasons", a.reasons}};
  }
  return j;
}

/// Indented verdict tree for terminal output.
inline std::string verdict_tree(const NddCertificate& c) {
  std::ostringstream os;
  os << "verdict: " << to_string(c.report.verdict) << "\n";
  if (!c.report.grounds.empty()) {
    os << "  grounds:";
    for (const auto& g : c.report.grounds) os << " " << g;
    os << "\n";
  }
  for (const auto& [name, ok] : c.checks) os << "  [" << (ok ? "ok" : "FAIL") << "] " << name << "\n";
  for (const auto& note : c.monotonicity_notes) os << "      " << note << "\n";
  for (const auto& rung : c.ladder) {
    os << "      eps = " << rung.epsilon << ": " << to_string(rung.report.verdict) << " after "
       << rung.report.iterations_used << " steps";
    if (rung.report.ultimate_box) os << ", box radius " << rung.report.ultimate_box->radius();
    os << "\n";
  }
  if (c.admissible) {
    os << "  admissible set: " << (c.admissible->member ? "member" : "not member") << ", margin "
       << c.admissible->margin << "\n";
  }
  for (const auto& why : c.report.reasons) os << "  reason: " << why << "\n";
  return os.str();
}

}  // namespace ndd
