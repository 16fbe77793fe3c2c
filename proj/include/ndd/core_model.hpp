#pragma once

// Domain types shared by every module: interval boxes, sign structures,
// subsystem and network descriptors, simulation settings and certificate
// reports. Descriptors are plain values; once validated they are treated as
// immutable and may be shared freely between worker threads.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ndd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SignMatrix = Eigen::MatrixXi;
using SignVector = Eigen::VectorXi;

// ---------------------------------------------------------------------------
// Errors

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (no convergence, overflow, stalled stepping).
class NumericalError : public Error {
 public:
  using Error::Error;
};

enum class ViolationCode {
  EdgeNotForward,
  EdgeOutOfRange,
  NonCooperativeDelta,
  NonzeroDeltaDiagonal,
  DimensionMismatch,
  InvalidParameter,
  MissingParameter,
  UnknownFamily,
  SharedTimescale,
  Schema,
};

inline const char* to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::EdgeNotForward: return "EdgeNotForward";
    case ViolationCode::EdgeOutOfRange: return "EdgeOutOfRange";
    case ViolationCode::NonCooperativeDelta: return "NonCooperativeDelta";
    case ViolationCode::NonzeroDeltaDiagonal: return "NonzeroDeltaDiagonal";
    case ViolationCode::DimensionMismatch: return "DimensionMismatch";
    case ViolationCode::InvalidParameter: return "InvalidParameter";
    case ViolationCode::MissingParameter: return "MissingParameter";
    case ViolationCode::UnknownFamily: return "UnknownFamily";
    case ViolationCode::SharedTimescale: return "SharedTimescale";
    case ViolationCode::Schema: return "Schema";
  }
  return "Unknown";
}

struct Violation {
  ViolationCode code;
  std::string message;
  std::string location;  // "line 12, column 5" or a descriptor path, may be empty

  std::string describe() const {
    std::string out = std::string(to_string(code)) + ": " + message;
    if (!location.empty()) out += " (" + location + ")";
    return out;
  }
};

/// Raised when a descriptor or config violates the schema or structural
/// constraints. Carries every violation found, not only the first one.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : Error(summarize(violations)), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const { return violations_; }

  bool has(ViolationCode code) const {
    return std::any_of(violations_.begin(), violations_.end(),
                       [code](const Violation& v) { return v.code == code; });
  }

 private:
  static std::string summarize(const std::vector<Violation>& violations) {
    std::ostringstream os;
    os << violations.size() << " validation error(s)";
    for (const auto& v : violations) os << "\n  " << v.describe();
    return os.str();
  }

  std::vector<Violation> violations_;
};

// ---------------------------------------------------------------------------
// IntervalBox

/// Componentwise interval [lower, upper]. Infinite bounds are allowed and
/// mark unbounded coordinates (e.g. the nonnegative orthant).
class IntervalBox {
 public:
  IntervalBox() = default;

  IntervalBox(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size()) {
      throw std::invalid_argument("IntervalBox: lower and upper have different dimensions");
    }
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
      if (std::isnan(lower_[i]) || std::isnan(upper_[i]) || lower_[i] > upper_[i]) {
        std::ostringstream os;
        os << "IntervalBox: lower > upper in component " << i << " (" << lower_[i] << " > "
           << upper_[i] << ")";
        throw std::invalid_argument(os.str());
      }
    }
  }

  static IntervalBox point(const Vector& x) { return IntervalBox(x, x); }

  static IntervalBox nonnegative(Eigen::Index dim) {
    return IntervalBox(Vector::Zero(dim),
                       Vector::Constant(dim, std::numeric_limits<double>::infinity()));
  }

  Eigen::Index dim() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  bool bounded() const { return lower_.allFinite() && upper_.allFinite(); }

  bool contains(const Vector& x, double tol = 0.0) const {
    if (x.size() != dim()) return false;
    for (Eigen::Index i = 0; i < dim(); ++i) {
      if (x[i] < lower_[i] - tol || x[i] > upper_[i] + tol) return false;
    }
    return true;
  }

  bool contains(const IntervalBox& other, double tol = 0.0) const {
    return contains(other.lower(), tol) && contains(other.upper(), tol);
  }

  /// Largest side length (infinity norm of upper - lower).
  double diameter() const { return dim() == 0 ? 0.0 : (upper_ - lower_).cwiseAbs().maxCoeff(); }

  /// Largest absolute coordinate of either corner.
  double radius() const {
    if (dim() == 0) return 0.0;
    return std::max(lower_.cwiseAbs().maxCoeff(), upper_.cwiseAbs().maxCoeff());
  }

  IntervalBox hull(const IntervalBox& other) const {
    return IntervalBox(lower_.cwiseMin(other.lower_), upper_.cwiseMax(other.upper_));
  }

  IntervalBox inflated(double amount) const {
    return IntervalBox(lower_.array() - amount, upper_.array() + amount);
  }

  friend bool operator==(const IntervalBox& a, const IntervalBox& b) {
    return a.lower_ == b.lower_ && a.upper_ == b.upper_;
  }

 private:
  Vector lower_;
  Vector upper_;
};

// ---------------------------------------------------------------------------
// Sign structures

/// Sign matrix Λ (entries ±1) plus the input/state orthant orders.
struct SignedStructure {
  SignMatrix lambda;
  SignVector sigma_u;
  SignVector sigma_x;

  /// Λ = σˣ (σᵘ)ᵀ, the sign pattern of the static characteristic of a
  /// monotone system with orders (σᵘ; σˣ).
  static SignedStructure from_orders(const SignVector& sigma_u, const SignVector& sigma_x) {
    SignedStructure s;
    s.sigma_u = sigma_u;
    s.sigma_x = sigma_x;
    s.lambda = sigma_x * sigma_u.transpose();
    return s;
  }

  bool well_formed() const {
    auto pm = [](int v) { return v == 1 || v == -1; };
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
      if (!pm(lambda.data()[i])) return false;
    for (Eigen::Index i = 0; i < sigma_u.size(); ++i)
      if (!pm(sigma_u[i])) return false;
    for (Eigen::Index i = 0; i < sigma_x.size(); ++i)
      if (!pm(sigma_x[i])) return false;
    return true;
  }
};

/// Replace structural zeros by +1 (sign(0) = +1).
inline SignMatrix to_lambda(const SignMatrix& pattern) {
  return pattern.unaryExpr([](int v) { return v < 0 ? -1 : 1; });
}

// ---------------------------------------------------------------------------
// Subsystems and networks

enum class SubsystemKind { GenericOde, SrnaFeedback, LinearFeedbackExample };

inline const char* to_string(SubsystemKind kind) {
  switch (kind) {
    case SubsystemKind::GenericOde: return "generic-ode";
    case SubsystemKind::SrnaFeedback: return "srna-feedback";
    case SubsystemKind::LinearFeedbackExample: return "linear-feedback-example";
  }
  return "unknown";
}

inline std::optional<SubsystemKind> parse_kind(const std::string& s) {
  if (s == "generic-ode") return SubsystemKind::GenericOde;
  if (s == "srna-feedback") return SubsystemKind::SrnaFeedback;
  if (s == "linear-feedback-example") return SubsystemKind::LinearFeedbackExample;
  return std::nullopt;
}

using ParamMap = std::map<std::string, double>;

struct SubsystemDescriptor {
  int id = 1;  // 1-based, matches edge endpoints in configs
  SubsystemKind kind = SubsystemKind::SrnaFeedback;
  std::string model;  // registered right-hand side name, generic-ode only
  ParamMap params;
  double epsilon = 0.1;
  double nu = 1.0;
  // Slow and fast state dimensions; 0 means "use the family default".
  int state_dim = 0;
  int fast_dim = 0;
  // Optional override of the admissible reference interval.
  std::optional<std::pair<double, double>> admissible_reference;

  double param(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw Error("subsystem " + std::to_string(id) + ": missing parameter '" + key + "'");
    return it->second;
  }

  double param_or(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }

  friend bool operator==(const SubsystemDescriptor&, const SubsystemDescriptor&) = default;
};

enum class EdgeType { Hill, Constant, Affine };

inline const char* to_string(EdgeType t) {
  switch (t) {
    case EdgeType::Hill: return "hill";
    case EdgeType::Constant: return "constant";
    case EdgeType::Affine: return "affine";
  }
  return "unknown";
}

inline std::optional<EdgeType> parse_edge_type(const std::string& s) {
  if (s == "hill") return EdgeType::Hill;
  if (s == "constant") return EdgeType::Constant;
  if (s == "affine") return EdgeType::Affine;
  return std::nullopt;
}

/// Hill activation B (y/k)^n / (1 + (y/k)^n).
inline double hill_activation(double y, double B, double k, double n) {
  if (y <= 0.0) return 0.0;
  const double q = std::pow(y / k, n);
  if (!std::isfinite(q)) return B;
  return B * q / (1.0 + q);
}

/// Prescribed interaction j → i. `from` = 0 denotes an external constant
/// source; subsystem indices are 1-based.
struct Edge {
  int from = 0;
  int to = 1;
  EdgeType type = EdgeType::Constant;
  double B = 0.0, k = 1.0, n = 1.0;  // hill
  double r_star = 0.0;               // constant
  double gain = 0.0, offset = 0.0;   // affine

  double evaluate(double y_from) const {
    switch (type) {
      case EdgeType::Hill: return hill_activation(y_from, B, k, n);
      case EdgeType::Constant: return r_star;
      case EdgeType::Affine: return gain * y_from + offset;
    }
    return 0.0;
  }

  friend bool operator==(const Edge&, const Edge&) = default;
};

enum class UnintendedKind { None, ResourceCompetition, Matrix };

inline const char* to_string(UnintendedKind k) {
  switch (k) {
    case UnintendedKind::None: return "none";
    case UnintendedKind::ResourceCompetition: return "resource-competition";
    case UnintendedKind::Matrix: return "matrix";
  }
  return "unknown";
}

/// Static unintended map w = Δ(d). All supported variants are linear,
/// w = M d, with M ≥ 0 and zero diagonal when cooperative.
struct UnintendedMap {
  UnintendedKind kind = UnintendedKind::None;
  Matrix custom;  // only for UnintendedKind::Matrix

  Matrix coefficients(Eigen::Index n) const {
    switch (kind) {
      case UnintendedKind::None: return Matrix::Zero(n, n);
      case UnintendedKind::ResourceCompetition: {
        Matrix m = Matrix::Ones(n, n);
        m.diagonal().setZero();
        return m;
      }
      case UnintendedKind::Matrix: return custom;
    }
    return Matrix::Zero(n, n);
  }

  Vector apply(const Vector& d) const {
    switch (kind) {
      case UnintendedKind::None: return Vector::Zero(d.size());
      case UnintendedKind::ResourceCompetition: return Vector::Constant(d.size(), d.sum()) - d;
      case UnintendedKind::Matrix: return custom * d;
    }
    return Vector::Zero(d.size());
  }

  friend bool operator==(const UnintendedMap& a, const UnintendedMap& b) {
    if (a.kind != b.kind) return false;
    if (a.kind != UnintendedKind::Matrix) return true;
    return a.custom.rows() == b.custom.rows() && a.custom.cols() == b.custom.cols() &&
           a.custom == b.custom;
  }
};

struct NetworkDescriptor {
  std::vector<SubsystemDescriptor> subsystems;
  std::vector<Edge> edges;
  UnintendedMap unintended;
  // A-priori symmetric disturbance bound used to seed the small-gain
  // iteration for families without a built-in bound.
  std::optional<double> disturbance_bound;

  std::size_t size() const { return subsystems.size(); }

  friend bool operator==(const NetworkDescriptor&, const NetworkDescriptor&) = default;
};

// ---------------------------------------------------------------------------
// Simulation configuration

enum class SolverKind { AdaptiveEmbedded, FixedStep };

inline const char* to_string(SolverKind s) {
  return s == SolverKind::AdaptiveEmbedded ? "adaptive-embedded" : "fixed-step";
}

struct SimulationConfig {
  double t_final = 100.0;
  std::optional<std::vector<double>> initial_state;  // empty = origin
  SolverKind solver = SolverKind::AdaptiveEmbedded;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double steady_state_window = 0.1;  // fraction of the horizon
  double steady_state_threshold = 1e-7;
  double fixed_step = 0.0;           // 0 → ν/20
  std::size_t output_points = 401;
  int max_horizon_doublings = 10;

  friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

// ---------------------------------------------------------------------------
// Certificate report

enum class Verdict { CertifiedBounded, Diverged, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::CertifiedBounded: return "certified-bounded";
    case Verdict::Diverged: return "diverged";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct CertificateReport {
  Verdict verdict = Verdict::Inconclusive;
  std::optional<IntervalBox> ultimate_box;
  std::size_t iterations_used = 0;
  std::optional<double> contraction_margin;
  std::optional<bool> admissible_set_membership;
  std::vector<std::string> reasons;  // failed preconditions / divergence causes
  std::vector<std::string> grounds;  // which result the verdict rests on

  bool certified() const { return verdict == Verdict::CertifiedBounded; }
};

// ---------------------------------------------------------------------------
// Validation

/// Checks the structural constraints of a network: prescribed edges only
/// point forward (no feedback), the unintended map is cooperative, and the
/// per-subsystem parameters are positive. Returns every violation found.
inline std::vector<Violation> network_violations(const NetworkDescriptor& net) {
  std::vector<Violation> out;
  const int n = static_cast<int>(net.subsystems.size());
  auto where = [](const std::string& s) { return s; };

  for (int i = 0; i < n; ++i) {
    const auto& s = net.subsystems[static_cast<std::size_t>(i)];
    const std::string loc = where("subsystems[" + std::to_string(i) + "]");
    if (s.id != i + 1) {
      out.push_back({ViolationCode::Schema, "subsystem id " + std::to_string(s.id) + " does not match its position " + std::to_string(i + 1), loc});
    }
    if (!(s.epsilon > 0.0) || !std::isfinite(s.epsilon)) {
      out.push_back({ViolationCode::InvalidParameter, "epsilon must be positive", loc});
    }
    if (!(s.nu > 0.0) || !std::isfinite(s.nu)) {
      out.push_back({ViolationCode::InvalidParameter, "nu must be positive", loc});
    }
    if (i > 0 && s.nu != net.subsystems[0].nu) {
      out.push_back({ViolationCode::SharedTimescale, "all subsystems share a single nu", loc});
    }
    if (s.kind == SubsystemKind::SrnaFeedback) {
      for (const char* key : {"alpha", "lambda", "beta", "kappa", "delta"}) {
        auto it = s.params.find(key);
        if (it == s.params.end()) {
          out.push_back({ViolationCode::MissingParameter, std::string("srna-feedback requires '") + key + "'", loc});
        } else if (!(it->second > 0.0)) {
          out.push_back({ViolationCode::InvalidParameter, std::string("'") + key + "' must be positive", loc});
        }
      }
    }
    if (s.kind == SubsystemKind::GenericOde && s.model.empty()) {
      out.push_back({ViolationCode::MissingParameter, "generic-ode requires a registered model name", loc});
    }
    if (s.admissible_reference && s.admissible_reference->first > s.admissible_reference->second) {
      out.push_back({ViolationCode::InvalidParameter, "admissible_reference lower bound exceeds upper bound", loc});
    }
  }

  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const auto& edge = net.edges[e];
    const std::string loc = "edges[" + std::to_string(e) + "]";
    if (edge.to < 1 || edge.to > n || edge.from < 0 || edge.from > n) {
      out.push_back({ViolationCode::EdgeOutOfRange, "edge " + std::to_string(edge.from) + "->" + std::to_string(edge.to) + " references a missing subsystem", loc});
      continue;
    }
    if (edge.from >= edge.to) {
      out.push_back({ViolationCode::EdgeNotForward, "edge " + std::to_string(edge.from) + "->" + std::to_string(edge.to) + " must satisfy from < to (no feedback)", loc});
    }
    if (edge.type == EdgeType::Hill) {
      if (!(edge.B > 0.0) || !(edge.k > 0.0) || !(edge.n > 0.0)) {
        out.push_back({ViolationCode::InvalidParameter, "hill edge needs B, k, n > 0", loc});
      }
      if (edge.from == 0) {
        out.push_back({ViolationCode::InvalidParameter, "hill edge needs a source subsystem", loc});
      }
    }
    if (edge.type == EdgeType::Affine && edge.from == 0) {
      out.push_back({ViolationCode::InvalidParameter, "affine edge needs a source subsystem", loc});
    }
  }

  if (net.unintended.kind == UnintendedKind::Matrix) {
    const Matrix& m = net.unintended.custom;
    if (m.rows() != n || m.cols() != n) {
      out.push_back({ViolationCode::DimensionMismatch, "unintended matrix must be " + std::to_string(n) + "x" + std::to_string(n), "unintended"});
    } else {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (m(i, j) < 0.0) {
            out.push_back({ViolationCode::NonCooperativeDelta, "M(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") is negative", "unintended"});
          } else if (i == j && m(i, j) != 0.0) {
            out.push_back({ViolationCode::NonzeroDeltaDiagonal, "M(" + std::to_string(i + 1) + "," + std::to_string(i + 1) + ") must be zero", "unintended"});
          }
        }
      }
    }
  }
  return out;
}

/// Returns `net` unchanged if it is valid, otherwise throws ValidationError
/// listing all violations.
inline const NetworkDescriptor& validate_network(const NetworkDescriptor& net) {
  auto v = network_violations(net);
  if (!v.empty()) throw ValidationError(std::move(v));
  return net;
}

}  // namespace ndd
