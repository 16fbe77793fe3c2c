#include "ndd/core_model.hpp"

#include <gtest/gtest.h>

using namespace ndd;

namespace {

SubsystemDescriptor srna(int id) {
  SubsystemDescriptor s;
  s.id = id;
  s.kind = SubsystemKind::SrnaFeedback;
  s.params = {{"alpha", 100}, {"lambda", 1}, {"beta", 1}, {"kappa", 1}, {"delta", 1}};
  s.epsilon = 0.01;
  return s;
}

Edge hill(int from, int to) {
  Edge e;
  e.from = from;
  e.to = to;
  e.type = EdgeType::Hill;
  e.B = 10;
  e.k = 6;
  e.n = 4;
  return e;
}

Edge constant(int to, double r) {
  Edge e;
  e.to = to;
  e.type = EdgeType::Constant;
  e.r_star = r;
  return e;
}

}  // namespace

TEST(IntervalBox, RejectsInvertedBounds) {
  Vector lo(2), hi(2);
  lo << 0, 1;
  hi << 1, 0.5;
  EXPECT_THROW(IntervalBox(lo, hi), std::invalid_argument);
  EXPECT_THROW(IntervalBox(Vector::Zero(2), Vector::Zero(3)), std::invalid_argument);
}

TEST(IntervalBox, Geometry) {
  Vector lo(2), hi(2);
  lo << -1, 2;
  hi << 3, 2.5;
  const IntervalBox b(lo, hi);
  EXPECT_DOUBLE_EQ(b.diameter(), 4.0);
  EXPECT_DOUBLE_EQ(b.radius(), 3.0);
  Vector in(2);
  in << 0, 2.2;
  EXPECT_TRUE(b.contains(in));
  in[1] = 3;
  EXPECT_FALSE(b.contains(in));
  EXPECT_TRUE(b.hull(IntervalBox::point(in)).contains(in));
  EXPECT_DOUBLE_EQ(IntervalBox::point(in).diameter(), 0.0);
  EXPECT_FALSE(IntervalBox::nonnegative(2).bounded());
}

TEST(SignedStructure, FromOrders) {
  SignVector su(2), sx(1);
  su << 1, -1;
  sx << 1;
  const auto s = SignedStructure::from_orders(su, sx);
  EXPECT_EQ(s.lambda(0, 0), 1);
  EXPECT_EQ(s.lambda(0, 1), -1);
  EXPECT_TRUE(s.well_formed());
  SignMatrix z(1, 2);
  z << 0, -1;
  EXPECT_EQ(to_lambda(z)(0, 0), 1);
}

TEST(ValidateNetwork, IndependentTripleIsValid) {
  NetworkDescriptor net;
  for (int i = 1; i <= 3; ++i) {
    net.subsystems.push_back(srna(i));
    net.edges.push_back(constant(i, 10));
  }
  net.unintended.kind = UnintendedKind::ResourceCompetition;
  EXPECT_TRUE(network_violations(net).empty());
  EXPECT_NO_THROW(validate_network(net));
}

TEST(ValidateNetwork, CascadeIsValid) {
  NetworkDescriptor net;
  for (int i = 1; i <= 5; ++i) net.subsystems.push_back(srna(i));
  net.edges.push_back(constant(1, 10));
  for (int i = 1; i < 5; ++i) net.edges.push_back(hill(i, i + 1));
  net.unintended.kind = UnintendedKind::ResourceCompetition;
  EXPECT_TRUE(network_violations(net).empty());
}

TEST(ValidateNetwork, BackwardEdgeRejected) {
  NetworkDescriptor net;
  for (int i = 1; i <= 3; ++i) net.subsystems.push_back(srna(i));
  net.edges.push_back(hill(3, 2));
  try {
    validate_network(net);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_TRUE(e.has(ViolationCode::EdgeNotForward));
  }
}

TEST(ValidateNetwork, ReportsAllViolations) {
  NetworkDescriptor net;
  for (int i = 1; i <= 3; ++i) net.subsystems.push_back(srna(i));
  net.subsystems[1].epsilon = -1;
  net.edges.push_back(hill(3, 2));
  net.edges.push_back(hill(2, 2));
  net.unintended.kind = UnintendedKind::Matrix;
  net.unintended.custom = Matrix::Zero(3, 3);
  net.unintended.custom(0, 1) = -0.5;
  net.unintended.custom(2, 2) = 1.0;
  const auto v = network_violations(net);
  auto count = [&](ViolationCode c) {
    return std::count_if(v.begin(), v.end(), [c](const Violation& x) { return x.code == c; });
  };
  EXPECT_EQ(count(ViolationCode::EdgeNotForward), 2);
  EXPECT_EQ(count(ViolationCode::NonCooperativeDelta), 1);
  EXPECT_EQ(count(ViolationCode::NonzeroDeltaDiagonal), 1);
  EXPECT_EQ(count(ViolationCode::InvalidParameter), 1);
}

TEST(ValidateNetwork, MissingParametersAndRanges) {
  NetworkDescriptor net;
  net.subsystems.push_back(srna(1));
  net.subsystems[0].params.erase("kappa");
  net.subsystems.push_back(srna(2));
  net.subsystems[1].nu = 0.5;
  net.edges.push_back(hill(1, 7));
  const auto v = network_violations(net);
  auto has = [&](ViolationCode c) {
    return std::any_of(v.begin(), v.end(), [c](const Violation& x) { return x.code == c; });
  };
  EXPECT_TRUE(has(ViolationCode::MissingParameter));
  EXPECT_TRUE(has(ViolationCode::SharedTimescale));
  EXPECT_TRUE(has(ViolationCode::EdgeOutOfRange));
}

TEST(UnintendedMap, ApplyMatchesCoefficients) {
  UnintendedMap m;
  m.kind = UnintendedKind::ResourceCompetition;
  Vector d(4);
  d << 0.5, 1, 2, 4;
  EXPECT_TRUE(m.apply(d).isApprox(m.coefficients(4) * d));
  m.kind = UnintendedKind::None;
  EXPECT_TRUE(m.apply(d).isZero());
}

TEST(Edge, Evaluate) {
  EXPECT_NEAR(hill(1, 2).evaluate(6.0), 5.0, 1e-12);
  EXPECT_DOUBLE_EQ(constant(1, 3.5).evaluate(100.0), 3.5);
  Edge a;
  a.type = EdgeType::Affine;
  a.gain = 2;
  a.offset = 1;
  EXPECT_DOUBLE_EQ(a.evaluate(3), 7);
}
