#pragma once

// Sign-pattern sampling, incidence graphs, the undirected negative-cycle
// test and canonical decomposition functions for mixed-monotone maps.

#include "ndd/core_model.hpp"
#include "ndd/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace ndd {

using VectorField = std::function<Vector(const Vector&)>;

// ---------------------------------------------------------------------------
// Sign pattern sampling

/// Sign pattern of a Jacobian with explicit structural zeros.
/// Rows index outputs f_i, columns index the sampled coordinates.
struct SignPattern {
  SignMatrix signs;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  bool sampled_unbounded = false;  // some coordinate was truncated

  Eigen::Index rows() const { return signs.rows(); }
  Eigen::Index cols() const { return signs.cols(); }
};

class SignUnstable : public NumericalError {
 public:
  SignUnstable(int row, int col, Vector positive_at, Vector negative_at)
      : NumericalError(message(row, col)),
        row_(row),
        col_(col),
        positive_at_(std::move(positive_at)),
        negative_at_(std::move(negative_at)) {}

  int row() const { return row_; }
  int col() const { return col_; }
  const Vector& positive_witness() const { return positive_at_; }
  const Vector& negative_witness() const { return negative_at_; }

 private:
  static std::string message(int row, int col) {
    std::ostringstream os;
    os << "partial derivative d f_" << row << " / d xi_" << col
       << " changes sign over the sampled domain";
    return os.str();
  }

  int row_, col_;
  Vector positive_at_, negative_at_;
};

struct SamplingOptions {
  int n_samples = 256;
  double fd_step = 1e-6;   // relative, h = fd_step (1 + |xi|)
  double tau_zero = 1e-9;  // dead-band, scaled by (1 + |f_i|)
  double unbounded_cap = 1e3;
  std::uint64_t seed = 0x5eed;
};

namespace detail {

inline double radical_inverse(std::uint64_t index, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

inline unsigned nth_prime(std::size_t n) {
  static const unsigned primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                    43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
  if (n < sizeof(primes) / sizeof(primes[0])) return primes[n];
  unsigned c = primes[sizeof(primes) / sizeof(primes[0]) - 1];
  std::size_t k = sizeof(primes) / sizeof(primes[0]) - 1;
  while (k < n) {
    c += 2;
    bool prime = true;
    for (unsigned d = 3; d * d <= c; d += 2)
      if (c % d == 0) { prime = false; break; }
    if (prime) ++k;
  }
  return c;
}

/// Map a unit coordinate q to [lo, hi]; unbounded sides are truncated at
/// `cap` and sampled log-uniformly so small and large magnitudes are both
/// represented.
inline double map_unit(double q, double lo, double hi, double cap) {
  const bool lo_inf = !std::isfinite(lo), hi_inf = !std::isfinite(hi);
  if (!lo_inf && !hi_inf) return lo + q * (hi - lo);
  if (!lo_inf && hi_inf) return lo + std::expm1(q * std::log1p(cap));
  if (lo_inf && !hi_inf) return hi - std::expm1(q * std::log1p(cap));
  const double s = 2.0 * q - 1.0;
  return std::copysign(std::expm1(std::abs(s) * std::log1p(cap)), s);
}

}  // namespace detail

/// Quasi-random points in `domain` (Halton with a seeded Cranley-Patterson
/// rotation). Deterministic for a fixed seed.
inline std::vector<Vector> quasi_random_points(const IntervalBox& domain, int n, std::uint64_t seed,
                                               double unbounded_cap = 1e3) {
  const auto dim = static_cast<std::size_t>(domain.dim());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> shift(dim);
  for (auto& s : shift) s = uni(rng);
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Vector x(static_cast<Eigen::Index>(dim));
    for (std::size_t d = 0; d < dim; ++d) {
      double q = detail::radical_inverse(static_cast<std::uint64_t>(k) + 1, detail::nth_prime(d)) + shift[d];
      q -= std::floor(q);
      const auto i = static_cast<Eigen::Index>(d);
      x[i] = detail::map_unit(q, domain.lower()[i], domain.upper()[i], unbounded_cap);
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

/// Central finite-difference Jacobian, h_j = rel_step (1 + |xi_j|).
inline Matrix fd_jacobian(const VectorField& f, const Vector& xi, double rel_step = 1e-6) {
  const Vector f0 = f(xi);
  Matrix J(f0.size(), xi.size());
  Vector a = xi, b = xi;
  for (Eigen::Index j = 0; j < xi.size(); ++j) {
    const double h = rel_step * (1.0 + std::abs(xi[j]));
    a[j] = xi[j] + h;
    b[j] = xi[j] - h;
    J.col(j) = (f(a) - f(b)) / (a[j] - b[j]);
    a[j] = xi[j];
    b[j] = xi[j];
  }
  return J;
}

/// Samples the Jacobian sign pattern of `rhs` over `domain`. Entries whose
/// finite-difference magnitude stays inside the dead-band at every sample
/// are structural zeros. Opposite strict signs raise SignUnstable.
inline SignPattern sample_sign_pattern(const VectorField& rhs, const IntervalBox& domain,
                                       const SamplingOptions& opt = {}) {
  if (opt.n_samples < 1) throw std::invalid_argument("sample_sign_pattern: n_samples must be >= 1");
  const auto pts = quasi_random_points(domain, opt.n_samples, opt.seed, opt.unbounded_cap);

  struct Local {
    Matrix J;
    Vector f;
  };
  const auto evals = parallel_map(pts.size(), [&](std::size_t k) {
    return Local{fd_jacobian(rhs, pts[k], opt.fd_step), rhs(pts[k])};
  });

  const Eigen::Index rows = evals.front().J.rows(), cols = evals.front().J.cols();
  SignMatrix signs = SignMatrix::Zero(rows, cols);
  std::vector<int> pos_at(static_cast<std::size_t>(rows * cols), -1), neg_at(pos_at);
  for (std::size_t k = 0; k < evals.size(); ++k) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double band = opt.tau_zero * (1.0 + std::abs(evals[k].f[i]));
      for (Eigen::Index j = 0; j < cols; ++j) {
        const double v = evals[k].J(i, j);
        if (!std::isfinite(v)) continue;
        const auto slot = static_cast<std::size_t>(i * cols + j);
        if (v > band && pos_at[slot] < 0) pos_at[slot] = static_cast<int>(k);
        if (v < -band && neg_at[slot] < 0) neg_at[slot] = static_cast<int>(k);
      }
    }
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto slot = static_cast<std::size_t>(i * cols + j);
      if (pos_at[slot] >= 0 && neg_at[slot] >= 0) {
        throw SignUnstable(static_cast<int>(i), static_cast<int>(j),
                           pts[static_cast<std::size_t>(pos_at[slot])],
                           pts[static_cast<std::size_t>(neg_at[slot])]);
      }
      signs(i, j) = pos_at[slot] >= 0 ? 1 : (neg_at[slot] >= 0 ? -1 : 0);
    }
  }

  SignPattern out;
  out.signs = signs;
  out.sampled_unbounded = !domain.bounded();
  for (Eigen::Index i = 0; i < rows; ++i) out.row_labels.push_back("f" + std::to_string(i));
  for (Eigen::Index j = 0; j < cols; ++j) out.col_labels.push_back("xi" + std::to_string(j));
  return out;
}

// ---------------------------------------------------------------------------
// Incidence graph

struct SignedEdge {
  int from;
  int to;
  int sign;
};

/// Nodes 0..n_state-1 are states, n_state..n_state+n_input-1 are inputs.
/// Edges run from any coordinate to a state.
struct IncidenceGraph {
  int n_state = 0;
  int n_input = 0;
  std::vector<std::string> labels;
  std::vector<SignedEdge> edges;

  int node_count() const { return n_state + n_input; }
};

/// Builds the incidence graph of a pattern whose rows are the state
/// derivatives and whose columns are [states, inputs]. Diagonal state
/// entries become self-loops, which the cycle test ignores.
inline IncidenceGraph build_incidence_graph(const SignPattern& pattern,
                                            std::vector<std::string> labels = {}) {
  IncidenceGraph g;
  g.n_state = static_cast<int>(pattern.rows());
  g.n_input = static_cast<int>(pattern.cols() - pattern.rows());
  if (g.n_input < 0) throw std::invalid_argument("build_incidence_graph: fewer columns than rows");
  if (labels.empty()) {
    for (int i = 0; i < g.n_state; ++i) labels.push_back("x" + std::to_string(i + 1));
    for (int i = 0; i < g.n_input; ++i) labels.push_back("u" + std::to_string(i + 1));
  }
  if (static_cast<int>(labels.size()) != g.node_count())
    throw std::invalid_argument("build_incidence_graph: label count mismatch");
  g.labels = std::move(labels);
  for (int j = 0; j < pattern.cols(); ++j) {
    for (int i = 0; i < pattern.rows(); ++i) {
      const int s = pattern.signs(i, j);
      if (s != 0) g.edges.push_back({j, i, s});
    }
  }
  return g;
}

struct MonotonicityVerdict {
  bool monotone = false;
  SignVector sigma_x;
  SignVector sigma_u;
  // Closed walk of node indices (first == last) whose edge-sign product is
  // negative; empty when monotone.
  std::vector<int> witness;
  std::vector<int> witness_signs;

  std::string witness_text(const IncidenceGraph& g) const {
    std::string s;
    for (std::size_t k = 0; k < witness.size(); ++k) {
      s += g.labels[static_cast<std::size_t>(witness[k])];
      if (k + 1 < witness.size()) s += witness_signs[k] > 0 ? " -(+)- " : " -(-)- ";
    }
    return s;
  }
};

/// Two-coloring test for undirected negative cycles. Self-loops are
/// ignored; parallel edges are kept. Each connected component is colored
/// from its lowest-index node with +1, so the result does not depend on
/// edge order.
inline MonotonicityVerdict detect_negative_undirected_cycle(const IncidenceGraph& g) {
  const int n = g.node_count();
  struct Adj {
    int to;
    int sign;
  };
  std::vector<std::vector<Adj>> adj(static_cast<std::size_t>(n));
  std::vector<SignedEdge> edges;
  for (const auto& e : g.edges) {
    if (e.from == e.to) continue;
    adj[static_cast<std::size_t>(e.from)].push_back({e.to, e.sign});
    adj[static_cast<std::size_t>(e.to)].push_back({e.from, e.sign});
    edges.push_back(e);
  }
  for (auto& a : adj)
    std::sort(a.begin(), a.end(), [](const Adj& x, const Adj& y) {
      return x.to != y.to ? x.to < y.to : x.sign > y.sign;
    });

  std::vector<int> color(static_cast<std::size_t>(n), 0), parent(static_cast<std::size_t>(n), -1),
      parent_sign(static_cast<std::size_t>(n), 0), depth(static_cast<std::size_t>(n), 0);
  MonotonicityVerdict v;
  for (int root = 0; root < n; ++root) {
    if (color[static_cast<std::size_t>(root)] != 0) continue;
    color[static_cast<std::size_t>(root)] = 1;
    std::queue<int> q;
    q.push(root);
    while (!q.empty()) {
      const int a = q.front();
      q.pop();
      for (const auto& e : adj[static_cast<std::size_t>(a)]) {
        const auto b = static_cast<std::size_t>(e.to);
        if (color[b] == 0) {
          color[b] = color[static_cast<std::size_t>(a)] * e.sign;
          parent[b] = a;
          parent_sign[b] = e.sign;
          depth[b] = depth[static_cast<std::size_t>(a)] + 1;
          q.push(e.to);
        }
      }
    }
  }

  // Check every edge; the first conflicting one (in sorted order) yields
  // the witness: tree path a .. lca .. b closed by the edge b - a.
  std::sort(edges.begin(), edges.end(), [](const SignedEdge& x, const SignedEdge& y) {
    const int xa = std::min(x.from, x.to), ya = std::min(y.from, y.to);
    const int xb = std::max(x.from, x.to), yb = std::max(y.from, y.to);
    if (xa != ya) return xa < ya;
    if (xb != yb) return xb < yb;
    return x.sign > y.sign;
  });
  for (const auto& e : edges) {
    const int a = std::min(e.from, e.to), b = std::max(e.from, e.to);
    if (color[static_cast<std::size_t>(a)] * color[static_cast<std::size_t>(b)] == e.sign) continue;
    std::vector<int> up_a{a}, up_b{b};
    std::vector<int> sa, sb;
    int x = a, y = b;
    while (depth[static_cast<std::size_t>(x)] > depth[static_cast<std::size_t>(y)]) {
      sa.push_back(parent_sign[static_cast<std::size_t>(x)]);
      x = parent[static_cast<std::size_t>(x)];
      up_a.push_back(x);
    }
    while (depth[static_cast<std::size_t>(y)] > depth[static_cast<std::size_t>(x)]) {
      sb.push_back(parent_sign[static_cast<std::size_t>(y)]);
      y = parent[static_cast<std::size_t>(y)];
      up_b.push_back(y);
    }
    while (x != y) {
      sa.push_back(parent_sign[static_cast<std::size_t>(x)]);
      x = parent[static_cast<std::size_t>(x)];
      up_a.push_back(x);
      sb.push_back(parent_sign[static_cast<std::size_t>(y)]);
      y = parent[static_cast<std::size_t>(y)];
      up_b.push_back(y);
    }
    // walk: a -> ... -> lca -> ... -> b -> a
    v.witness = up_a;
    v.witness_signs = sa;
    for (int k = static_cast<int>(up_b.size()) - 2; k >= 0; --k) {
      v.witness.push_back(up_b[static_cast<std::size_t>(k)]);
      v.witness_signs.push_back(sb[static_cast<std::size_t>(k)]);
    }
    v.witness.push_back(a);
    v.witness_signs.push_back(e.sign);
    v.monotone = false;
    return v;
  }

  v.monotone = true;
  v.sigma_x.resize(g.n_state);
  v.sigma_u.resize(g.n_input);
  for (int i = 0; i < g.n_state; ++i) v.sigma_x[i] = color[static_cast<std::size_t>(i)];
  for (int i = 0; i < g.n_input; ++i) v.sigma_u[i] = color[static_cast<std::size_t>(g.n_state + i)];
  return v;
}

// ---------------------------------------------------------------------------
// Decomposition functions

/// A mixed-monotone decomposition f̂(x⁺, x⁻): nondecreasing in x⁺,
/// nonincreasing in x⁻, and f̂(x, x) = f(x).
struct DecompositionFunction {
  Eigen::Index in_dim = 0;
  Eigen::Index out_dim = 0;
  std::function<Vector(const Vector&, const Vector&)> fn;

  Vector operator()(const Vector& xp, const Vector& xm) const { return fn(xp, xm); }
};

/// Canonical decomposition of f with sign matrix Λ (zeros read as +1):
/// row i evaluates f_i at diag(Λ⁺_i) x⁺ + diag(Λ⁻_i) x⁻ with
/// Λ⁻ = -min(0, Λ) and Λ⁺ = 1 - Λ⁻.
inline DecompositionFunction canonical_decomposition(VectorField f, const SignMatrix& lambda) {
  DecompositionFunction d;
  d.in_dim = lambda.cols();
  d.out_dim = lambda.rows();
  const SignMatrix lam = to_lambda(lambda);
  d.fn = [f = std::move(f), lam](const Vector& xp, const Vector& xm) {
    Vector out(lam.rows());
    Vector arg(lam.cols());
    for (Eigen::Index i = 0; i < lam.rows(); ++i) {
      for (Eigen::Index j = 0; j < lam.cols(); ++j) arg[j] = lam(i, j) > 0 ? xp[j] : xm[j];
      out[i] = f(arg)[i];
    }
    return out;
  };
  return d;
}

/// Decomposition of h = f ∘ g: ĥ(x1, x2) = f̂(ĝ(x1, x2), ĝ(x2, x1)).
inline DecompositionFunction compose_decompositions(const DecompositionFunction& f_hat,
                                                    const DecompositionFunction& g_hat) {
  if (g_hat.out_dim != f_hat.in_dim) {
    throw ValidationError({{ViolationCode::DimensionMismatch,
                            "cannot compose: inner output dimension " + std::to_string(g_hat.out_dim) +
                                " != outer input dimension " + std::to_string(f_hat.in_dim),
                            ""}});
  }
  DecompositionFunction h;
  h.in_dim = g_hat.in_dim;
  h.out_dim = f_hat.out_dim;
  h.fn = [f_hat, g_hat](const Vector& x1, const Vector& x2) {
    return f_hat(g_hat(x1, x2), g_hat(x2, x1));
  };
  return h;
}

/// Identity decomposition, ι̂(x⁺, x⁻) = x⁺.
inline DecompositionFunction identity_decomposition(Eigen::Index dim) {
  return {dim, dim, [](const Vector& xp, const Vector&) { return xp; }};
}

/// Encloses the image of `box` under f: [f̂(lower, upper), f̂(upper, lower)].
inline IntervalBox box_propagate(const DecompositionFunction& f_hat, const IntervalBox& box,
                                 double tol = 1e-12) {
  Vector lo = f_hat(box.lower(), box.upper());
  Vector hi = f_hat(box.upper(), box.lower());
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (lo[i] > hi[i]) {
      if (lo[i] - hi[i] > tol * (1.0 + std::abs(hi[i])))
        throw Error("box_propagate: decomposition produced lower > upper in component " + std::to_string(i));
      hi[i] = lo[i];
    }
  }
  return IntervalBox(lo, hi);
}

}  // namespace ndd
