#include "ndd/genecircuit.hpp"
#include "ndd/monotone_analysis.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <set>

using namespace ndd;

namespace {

Matrix a_matrix() {
  Matrix A(2, 2);
  A << 1, -2, 3, 4;
  return A;
}

// Example 2 regulated subsystem over xi = (x, z, r, w).
Vector example2(const Vector& xi, double eps) {
  Vector f(2);
  f << -xi[0] + xi[1] + xi[3], -xi[1] + (xi[2] - xi[0]) / eps;
  return f;
}

IntervalBox box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  Vector l(static_cast<Eigen::Index>(lo.size())), h(static_cast<Eigen::Index>(hi.size()));
  Eigen::Index i = 0;
  for (double v : lo) l[i++] = v;
  i = 0;
  for (double v : hi) h[i++] = v;
  return IntervalBox(l, h);
}

bool has_edge(const IncidenceGraph& g, int from, int to, int sign) {
  return std::any_of(g.edges.begin(), g.edges.end(), [&](const SignedEdge& e) {
    return e.from == from && e.to == to && e.sign == sign;
  });
}

// Exhaustive search over simple cycles of an undirected multigraph.
bool brute_force_has_negative_cycle(int n, const std::vector<SignedEdge>& edges) {
  std::vector<SignedEdge> es;
  for (const auto& e : edges)
    if (e.from != e.to) es.push_back(e);
  bool found = false;
  std::vector<bool> used(es.size(), false);
  std::vector<bool> on_path(static_cast<std::size_t>(n), false);
  std::function<void(int, int, int)> dfs = [&](int start, int node, int sign) {
    if (found) return;
    for (std::size_t k = 0; k < es.size() && !found; ++k) {
      if (used[k]) continue;
      int other;
      if (es[k].from == node) other = es[k].to;
      else if (es[k].to == node) other = es[k].from;
      else continue;
      if (other < start) continue;
      const int s = sign * es[k].sign;
      if (other == start) {
        if (s < 0) found = true;
        continue;
      }
      if (on_path[static_cast<std::size_t>(other)]) continue;
      used[k] = true;
      on_path[static_cast<std::size_t>(other)] = true;
      dfs(start, other, s);
      on_path[static_cast<std::size_t>(other)] = false;
      used[k] = false;
    }
  };
  for (int s = 0; s < n && !found; ++s) {
    on_path[static_cast<std::size_t>(s)] = true;
    dfs(s, s, 1);
    on_path[static_cast<std::size_t>(s)] = false;
  }
  return found;
}

void expect_valid_verdict(const IncidenceGraph& g, const MonotonicityVerdict& v) {
  if (v.monotone) {
    for (const auto& e : g.edges) {
      if (e.from == e.to) continue;
      auto sig = [&](int k) { return k < g.n_state ? v.sigma_x[k] : v.sigma_u[k - g.n_state]; };
      EXPECT_EQ(sig(e.from) * sig(e.to), e.sign);
    }
  } else {
    ASSERT_GE(v.witness.size(), 3u);
    EXPECT_EQ(v.witness.front(), v.witness.back());
    ASSERT_EQ(v.witness_signs.size(), v.witness.size() - 1);
    int product = 1;
    for (std::size_t k = 0; k + 1 < v.witness.size(); ++k) {
      const int a = v.witness[k], b = v.witness[k + 1], s = v.witness_signs[k];
      product *= s;
      const bool exists = std::any_of(g.edges.begin(), g.edges.end(), [&](const SignedEdge& e) {
        return e.sign == s && ((e.from == a && e.to == b) || (e.from == b && e.to == a));
      });
      EXPECT_TRUE(exists);
    }
    EXPECT_EQ(product, -1);
  }
}

IncidenceGraph random_graph(std::mt19937_64& rng, int n_state, int n_input) {
  IncidenceGraph g;
  g.n_state = n_state;
  g.n_input = n_input;
  for (int i = 0; i < n_state + n_input; ++i) g.labels.push_back("n" + std::to_string(i));
  std::uniform_int_distribution<int> any(0, n_state + n_input - 1), state(0, n_state - 1),
      count(0, 2 * (n_state + n_input)), coin(0, 1);
  const int m = count(rng);
  for (int k = 0; k < m; ++k) g.edges.push_back({any(rng), state(rng), coin(rng) ? 1 : -1});
  return g;
}

}  // namespace

TEST(SignPattern, LinearMap) {
  const Matrix A = a_matrix();
  const auto pat = sample_sign_pattern([&](const Vector& x) -> Vector { return A * x; },
                                       box({-5, -5}, {5, 5}));
  SignMatrix expect(2, 2);
  expect << 1, -1, 1, 1;
  EXPECT_EQ(pat.signs, expect);
}

TEST(SignPattern, ConstantMapIsStructurallyZero) {
  Vector c(3);
  c << 1, -2, 1e6;
  const auto pat = sample_sign_pattern([&](const Vector&) -> Vector { return c; },
                                       box({0, 0}, {1, 1}));
  EXPECT_TRUE((pat.signs.array() == 0).all());
}

TEST(SignPattern, SignUnstableCarriesWitnesses) {
  auto f = [](const Vector& x) -> Vector {
    Vector y(1);
    y << x[0] * x[0];
    return y;
  };
  try {
    sample_sign_pattern(f, box({-1}, {1}));
    FAIL() << "expected SignUnstable";
  } catch (const SignUnstable& e) {
    EXPECT_EQ(e.row(), 0);
    EXPECT_EQ(e.col(), 0);
    EXPECT_GT(e.positive_witness()[0], 0.0);
    EXPECT_LT(e.negative_witness()[0], 0.0);
  }
}

TEST(SignPattern, UnboundedDomainIsSampledAndFlagged) {
  const Matrix A = a_matrix();
  const auto pat = sample_sign_pattern([&](const Vector& x) -> Vector { return A * x; },
                                       IntervalBox::nonnegative(2));
  EXPECT_TRUE(pat.sampled_unbounded);
  EXPECT_EQ(pat.signs(0, 1), -1);
  const auto pts = quasi_random_points(IntervalBox::nonnegative(2), 64, 1);
  for (const auto& p : pts) {
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_LE(p.maxCoeff(), 1e3);
  }
}

TEST(SignPattern, DeterministicForFixedSeed) {
  const auto a = quasi_random_points(box({0, 0, 0}, {1, 2, 3}), 32, 99);
  const auto b = quasi_random_points(box({0, 0, 0}, {1, 2, 3}), 32, 99);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k], b[k]);
}

TEST(IncidenceGraph, Example2Edges) {
  const auto pat = sample_sign_pattern([](const Vector& xi) { return example2(xi, 0.1); },
                                       box({0, 0, 0, 0}, {10, 10, 10, 10}));
  const auto g = build_incidence_graph(pat, {"x", "z", "r", "w"});
  ASSERT_EQ(g.node_count(), 4);
  EXPECT_TRUE(has_edge(g, 1, 0, +1));  // z -> x
  EXPECT_TRUE(has_edge(g, 3, 0, +1));  // w -> x
  EXPECT_TRUE(has_edge(g, 0, 1, -1));  // x -| z
  EXPECT_TRUE(has_edge(g, 2, 1, +1));  // r -> z
  int off_diagonal = 0;
  for (const auto& e : g.edges) off_diagonal += e.from != e.to;
  EXPECT_EQ(off_diagonal, 4);

  const auto v = detect_negative_undirected_cycle(g);
  EXPECT_FALSE(v.monotone);
  expect_valid_verdict(g, v);
  std::set<int> nodes(v.witness.begin(), v.witness.end());
  EXPECT_EQ(nodes, (std::set<int>{0, 1}));
}

TEST(IncidenceGraph, EmptyPattern) {
  SignPattern p;
  p.signs = SignMatrix::Zero(2, 3);
  const auto g = build_incidence_graph(p);
  EXPECT_EQ(g.node_count(), 3);
  EXPECT_TRUE(g.edges.empty());
  const auto v = detect_negative_undirected_cycle(g);
  EXPECT_TRUE(v.monotone);
  EXPECT_TRUE((v.sigma_x.array() == 1).all());
  EXPECT_TRUE((v.sigma_u.array() == 1).all());
}

TEST(IncidenceGraph, ReducedSrnaIsMonotone) {
  gene::SrnaParams prm;
  prm.alpha = 70;
  prm.lambda = 5;
  prm.delta = 0.5;
  prm.kappa = 10;
  prm.epsilon = 0.05;
  auto f = [&](const Vector& xi) {
    Vector out(1);
    out << gene::reduced_rhs(xi[0], xi[1], xi[2], prm);
    return out;
  };
  const auto pat = sample_sign_pattern(f, box({0.1, 1, 0}, {139, 133, 50}));
  const auto g = build_incidence_graph(pat, {"p", "r", "w"});
  EXPECT_TRUE(has_edge(g, 1, 0, +1));
  EXPECT_TRUE(has_edge(g, 2, 0, -1));
  EXPECT_TRUE(has_edge(g, 0, 0, -1));
  const auto v = detect_negative_undirected_cycle(g);
  ASSERT_TRUE(v.monotone);
  EXPECT_EQ(v.sigma_x[0], 1);
  EXPECT_EQ(v.sigma_u[0], 1);
  EXPECT_EQ(v.sigma_u[1], -1);
}

TEST(NegativeCycle, AgreesWithBruteForce) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 600; ++trial) {
    const int ns = 1 + trial % 5, ni = trial % 4;
    const auto g = random_graph(rng, ns, ni);
    const auto v = detect_negative_undirected_cycle(g);
    EXPECT_EQ(v.monotone, !brute_force_has_negative_cycle(g.node_count(), g.edges)) << trial;
    expect_valid_verdict(g, v);
  }
}

TEST(NegativeCycle, IndependentOfVisitOrder) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = random_graph(rng, 4, 3);
    const auto v = detect_negative_undirected_cycle(g);

    IncidenceGraph shuffled = g;
    std::shuffle(shuffled.edges.begin(), shuffled.edges.end(), rng);
    const auto vs = detect_negative_undirected_cycle(shuffled);
    EXPECT_EQ(v.monotone, vs.monotone);
    EXPECT_EQ(v.witness, vs.witness);
    if (v.monotone) {
      EXPECT_EQ(v.sigma_x, vs.sigma_x);
      EXPECT_EQ(v.sigma_u, vs.sigma_u);
    }

    // Relabel states among themselves and inputs among themselves.
    std::vector<int> ps{0, 1, 2, 3}, pi{4, 5, 6};
    std::shuffle(ps.begin(), ps.end(), rng);
    std::shuffle(pi.begin(), pi.end(), rng);
    auto perm = [&](int k) { return k < 4 ? ps[static_cast<std::size_t>(k)] : pi[static_cast<std::size_t>(k - 4)]; };
    IncidenceGraph relabeled = g;
    for (auto& e : relabeled.edges) {
      e.from = perm(e.from);
      e.to = perm(e.to);
    }
    const auto vr = detect_negative_undirected_cycle(relabeled);
    EXPECT_EQ(v.monotone, vr.monotone);
    expect_valid_verdict(relabeled, vr);
  }
}

TEST(CanonicalDecomposition, LinearMapIsSplitIntoParts) {
  const Matrix A = a_matrix();
  const Matrix Am = A.cwiseMin(0.0), Ap = A - Am;
  const auto fh = canonical_decomposition([&](const Vector& x) -> Vector { return A * x; },
                                          (A.array() < 0).select(-SignMatrix::Ones(2, 2), SignMatrix::Ones(2, 2)));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int k = 0; k < 100; ++k) {
    Vector xp(2), xm(2);
    xp << n(rng), n(rng);
    xm << n(rng), n(rng);
    EXPECT_TRUE(fh(xp, xm).isApprox(Ap * xp + Am * xm, 1e-12));
    EXPECT_TRUE(fh(xp, xp).isApprox(A * xp, 1e-12));
  }
}

TEST(CanonicalDecomposition, MixedRowUsesPlusAndMinus) {
  auto f = [](const Vector& x) {
    Vector y(2);
    y << x[0] - x[1], x[0] * x[1];
    return y;
  };
  SignMatrix lam(2, 2);
  lam << 1, -1, 1, 1;
  const auto fh = canonical_decomposition(f, lam);
  Vector xp(2), xm(2);
  xp << 3, 4;
  xm << 1, 2;
  EXPECT_DOUBLE_EQ(fh(xp, xm)[0], 3 - 2);
  EXPECT_DOUBLE_EQ(fh(xp, xm)[1], 12);
}

TEST(BoxPropagate, HandComputedLinear) {
  const Matrix A = a_matrix();
  SignMatrix lam(2, 2);
  lam << 1, -1, 1, 1;
  const auto fh = canonical_decomposition([&](const Vector& x) -> Vector { return A * x; }, lam);
  const auto out = box_propagate(fh, box({0, 0}, {1, 1}));
  EXPECT_DOUBLE_EQ(out.lower()[0], -2);
  EXPECT_DOUBLE_EQ(out.lower()[1], 0);
  EXPECT_DOUBLE_EQ(out.upper()[0], 1);
  EXPECT_DOUBLE_EQ(out.upper()[1], 7);

  Vector x(2);
  x << 0.3, 0.6;
  const auto pt = box_propagate(fh, IntervalBox::point(x));
  EXPECT_TRUE(pt.lower().isApprox(A * x));
  EXPECT_TRUE(pt.upper().isApprox(A * x));
}

TEST(BoxPropagate, RejectsInvalidDecomposition) {
  DecompositionFunction bad{1, 1, [](const Vector& xp, const Vector& xm) -> Vector { return xm - xp; }};
  EXPECT_THROW(box_propagate(bad, box({0}, {1})), Error);
}

TEST(Compose, IdentityAndDimensionCheck) {
  const Matrix A = a_matrix();
  SignMatrix lam(2, 2);
  lam << 1, -1, 1, 1;
  const auto gh = canonical_decomposition([&](const Vector& x) -> Vector { return A * x; }, lam);
  const auto h = compose_decompositions(identity_decomposition(2), gh);
  Vector a(2), b(2);
  a << 1, 2;
  b << -1, 0.5;
  EXPECT_TRUE(h(a, b).isApprox(gh(a, b)));
  EXPECT_THROW(compose_decompositions(identity_decomposition(3), gh), ValidationError);
}

TEST(Compose, LinearChainBracketsAndIsExactOnDiagonal) {
  Matrix A(2, 2), B(2, 2);
  A << 1, -2, 3, 4;
  B << 0.5, 1, -1, 2;
  auto lam_of = [](const Matrix& M) {
    return SignMatrix((M.array() < 0).select(-SignMatrix::Ones(2, 2), SignMatrix::Ones(2, 2)));
  };
  const auto ah = canonical_decomposition([&](const Vector& x) -> Vector { return A * x; }, lam_of(A));
  const auto bh = canonical_decomposition([&](const Vector& x) -> Vector { return B * x; }, lam_of(B));
  const auto h = compose_decompositions(ah, bh);
  const Matrix AB = A * B;
  const auto direct = canonical_decomposition([&](const Vector& x) -> Vector { return AB * x; }, lam_of(AB));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 1000; ++k) {
    Vector lo(2), hi(2);
    lo << u(rng), u(rng);
    hi = lo + Vector::Constant(2, 1.0 + u(rng) / 3.0);
    // Composition is at least as conservative as the direct decomposition.
    EXPECT_TRUE((h(lo, hi).array() <= direct(lo, hi).array() + 1e-12).all());
    EXPECT_TRUE((h(hi, lo).array() >= direct(hi, lo).array() - 1e-12).all());
    if (k < 100) {
      EXPECT_TRUE(h(lo, lo).isApprox(AB * lo, 1e-12));
    }
  }
}

TEST(DecompositionLaws, FullAndReducedSrnaAndExample2) {
  gene::SrnaParams prm;
  prm.epsilon = 0.05;
  struct Family {
    VectorField f;
    IntervalBox domain;
  };
  std::vector<Family> families;
  families.push_back({[](const Vector& xi) { return example2(xi, 0.1); }, box({0, 0, 0, 0}, {10, 10, 10, 10})});
  families.push_back({[&](const Vector& xi) {
                        Vector o(1);
                        o << gene::reduced_rhs(xi[0], xi[1], xi[2], prm);
                        return o;
                      },
                      box({0, 0, 0}, {100, 95, 20})});
  families.push_back({[&](const Vector& xi) {
                        const auto d = gene::srna_rhs({xi[0], xi[1], xi[2]}, xi[3], xi[4], prm);
                        return Vector(Eigen::Map<const Vector>(d.data(), 3));
                      },
                      box({0, 0, 0, 0, 0}, {50, 50, 100, 95, 20})});
  std::mt19937_64 rng(123);
  for (const auto& fam : families) {
    const auto pat = sample_sign_pattern(fam.f, fam.domain);
    const auto fh = canonical_decomposition(fam.f, pat.signs);
    const auto pts = quasi_random_points(fam.domain, 1000, 17);
    std::uniform_real_distribution<double> u(0, 1);
    for (const auto& x : pts) {
      const Vector fx = fam.f(x);
      EXPECT_LE((fh(x, x) - fx).cwiseAbs().maxCoeff(), 1e-10 * (1 + fx.cwiseAbs().maxCoeff()));
      Vector x2 = x, z = x;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double span = fam.domain.upper()[i] - fam.domain.lower()[i];
        x2[i] = std::min(fam.domain.upper()[i], x[i] + u(rng) * 0.2 * span);
        z[i] = fam.domain.lower()[i] + u(rng) * span;
      }
      const double tol = 1e-10 * (1 + fx.cwiseAbs().maxCoeff());
      EXPECT_TRUE((fh(x, z).array() <= fh(x2, z).array() + tol).all());
      EXPECT_TRUE((fh(z, x2).array() <= fh(z, x).array() + tol).all());
      const IntervalBox b(x, x2);
      const auto img = box_propagate(fh, b);
      Vector inner = x + (x2 - x).cwiseProduct(Vector::NullaryExpr(x.size(), [&]() { return u(rng); }));
      EXPECT_TRUE(img.contains(fam.f(inner), tol));
    }
  }
}
