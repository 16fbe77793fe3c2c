#pragma once

// Builders for the sRNA networks used by the recipes and tests.

#include "ndd/core_model.hpp"

#include <vector>

namespace ndd {

struct SrnaConstants {
  double alpha = 100.0;
  double lambda = 1.0;
  double beta = 1.0;
  double kappa = 1.0;
  double delta = 1.0;
};

inline SrnaConstants independent_triple_constants() { return {}; }

inline SrnaConstants cascade_constants() { return {70.0, 5.0, 1.0, 10.0, 0.5}; }

inline SubsystemDescriptor srna_subsystem(int id, const SrnaConstants& c, double eps, double nu = 1.0) {
  SubsystemDescriptor s;
  s.id = id;
  s.kind = SubsystemKind::SrnaFeedback;
  s.params = {{"alpha", c.alpha}, {"lambda", c.lambda}, {"beta", c.beta}, {"kappa", c.kappa}, {"delta", c.delta}};
  s.epsilon = eps;
  s.nu = nu;
  return s;
}

inline Edge reference_edge(int to, double r_star) {
  Edge e;
  e.from = 0;
  e.to = to;
  e.type = EdgeType::Constant;
  e.r_star = r_star;
  return e;
}

inline Edge hill_edge(int from, int to, double B, double k, double n) {
  Edge e;
  e.from = from;
  e.to = to;
  e.type = EdgeType::Hill;
  e.B = B;
  e.k = k;
  e.n = n;
  return e;
}

/// `count` identical subsystems, each driven by the constant reference r0,
/// coupled only through resource competition.
inline NetworkDescriptor independent_srna_network(int count, double r0, double eps, double nu = 1.0,
                                                  const SrnaConstants& c = independent_triple_constants()) {
  NetworkDescriptor net;
  for (int i = 1; i <= count; ++i) {
    net.subsystems.push_back(srna_subsystem(i, c, eps, nu));
    net.edges.push_back(reference_edge(i, r0));
  }
  net.unintended.kind = UnintendedKind::ResourceCompetition;
  return net;
}

/// Hill cascade: subsystem 1 gets r1, subsystem i > 1 gets
/// B_i (y_{i-1}/k)^n / (1 + (y_{i-1}/k)^n). `B` lists B_2..B_N.
inline NetworkDescriptor srna_cascade(const std::vector<double>& B, double r1, double eps, double nu = 1.0,
                                      double k = 6.0, double n = 4.0,
                                      const SrnaConstants& c = cascade_constants()) {
  NetworkDescriptor net;
  const int count = static_cast<int>(B.size()) + 1;
  for (int i = 1; i <= count; ++i) net.subsystems.push_back(srna_subsystem(i, c, eps, nu));
  net.edges.push_back(reference_edge(1, r1));
  for (int i = 2; i <= count; ++i) net.edges.push_back(hill_edge(i - 1, i, B[static_cast<std::size_t>(i - 2)], k, n));
  net.unintended.kind = UnintendedKind::ResourceCompetition;
  return net;
}

inline NetworkDescriptor fig4b_cascade(double eps, double nu = 1.0) { return srna_cascade({10, 10, 10, 10}, 10, eps, nu); }

inline NetworkDescriptor fig4c_cascade(double eps, double nu = 1.0) { return srna_cascade({10, 50, 50, 50}, 10, eps, nu); }

}  // namespace ndd
