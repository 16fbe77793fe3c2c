#pragma once

// Network config files. YAML (and therefore JSON) documents with top-level
// keys subsystems, edges, unintended, simulation. Every schema or validation
// error carries the line/column of the offending node.

#include "ndd/core_model.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace ndd {

struct Config {
  NetworkDescriptor network;
  SimulationConfig simulation;

  friend bool operator==(const Config&, const Config&) = default;
};

namespace detail {

inline std::string mark_of(const YAML::Node& n) {
  const auto m = n.Mark();
  if (m.is_null()) return {};
  return "line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1);
}

class ConfigReader {
 public:
  explicit ConfigReader(std::string source) : source_(std::move(source)) {}

  Config read(const YAML::Node& root) {
    Config cfg;
    if (!root.IsMap()) {
      schema(root, "top level must be a mapping");
      throw ValidationError(errors_);
    }
    allow_keys(root, {"subsystems", "edges", "unintended", "simulation", "nu", "disturbance_bound", "name"});

    std::optional<double> shared_nu;
    if (root["nu"]) shared_nu = real(root["nu"], "nu");
    if (root["disturbance_bound"]) cfg.network.disturbance_bound = real(root["disturbance_bound"], "disturbance_bound");

    const YAML::Node subs = root["subsystems"];
    if (!subs || !subs.IsSequence()) {
      schema(subs ? subs : root, "'subsystems' must be a list");
    } else {
      for (std::size_t i = 0; i < subs.size(); ++i) {
        sub_marks_.push_back(mark_of(subs[i]));
        cfg.network.subsystems.push_back(subsystem(subs[i], static_cast<int>(i) + 1, shared_nu));
      }
    }
    if (const YAML::Node edges = root["edges"]) {
      if (!edges.IsSequence()) {
        schema(edges, "'edges' must be a list");
      } else {
        for (std::size_t e = 0; e < edges.size(); ++e) {
          edge_marks_.push_back(mark_of(edges[e]));
          cfg.network.edges.push_back(edge(edges[e]));
        }
      }
    }
    if (const YAML::Node u = root["unintended"]) cfg.network.unintended = unintended(u);
    unintended_mark_ = root["unintended"] ? mark_of(root["unintended"]) : std::string{};
    if (const YAML::Node s = root["simulation"]) cfg.simulation = simulation(s);

    if (errors_.empty()) {
      for (auto v : network_violations(cfg.network)) {
        v.location = locate(v.location);
        errors_.push_back(std::move(v));
      }
    }
    if (!errors_.empty()) throw ValidationError(errors_);
    return cfg;
  }

 private:
  std::string source_;
  std::vector<Violation> errors_;
  std::vector<std::string> sub_marks_, edge_marks_;
  std::string unintended_mark_;

  std::string where(const YAML::Node& n) const {
    const std::string m = mark_of(n);
    return m.empty() ? source_ : source_ + ":" + m;
  }

  // Maps a descriptor path like "edges[2]" to "file: line L, column C (edges[2])".
  std::string locate(const std::string& path) const {
    auto lookup = [&](const std::string& prefix, const std::vector<std::string>& marks) -> std::string {
      if (path.rfind(prefix, 0) != 0) return {};
      const std::size_t idx = std::stoul(path.substr(prefix.size()));
      return idx < marks.size() ? marks[idx] : std::string{};
    };
    std::string m = lookup("edges[", edge_marks_);
    if (m.empty()) m = lookup("subsystems[", sub_marks_);
    if (m.empty() && path == "unintended") m = unintended_mark_;
    return m.empty() ? source_ + " (" + path + ")" : source_ + ":" + m + " (" + path + ")";
  }

  void schema(const YAML::Node& n, const std::string& msg, ViolationCode code = ViolationCode::Schema) {
    errors_.push_back({code, msg, where(n)});
  }

  void allow_keys(const YAML::Node& map, std::initializer_list<const char*> keys) {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) schema(kv.first, "unknown key '" + key + "'");
    }
  }

  double real(const YAML::Node& n, const std::string& what) {
    try {
      if (n.IsScalar()) return n.as<double>();
    } catch (const YAML::Exception&) {
    }
    schema(n, "'" + what + "' must be a number");
    return 0.0;
  }

  int integer(const YAML::Node& n, const std::string& what) {
    try {
      if (n.IsScalar()) return n.as<int>();
    } catch (const YAML::Exception&) {
    }
    schema(n, "'" + what + "' must be an integer");
    return 0;
  }

  std::string text(const YAML::Node& n, const std::string& what) {
    if (n.IsScalar()) return n.Scalar();
    schema(n, "'" + what + "' must be a string");
    return {};
  }

  SubsystemDescriptor subsystem(const YAML::Node& n, int position, std::optional<double> shared_nu) {
    SubsystemDescriptor s;
    s.id = position;
    if (!n.IsMap()) {
      schema(n, "subsystem entry must be a mapping");
      return s;
    }
    allow_keys(n, {"id", "kind", "model", "params", "epsilon", "nu", "state_dim", "fast_dim", "admissible_reference"});
    if (n["id"]) s.id = integer(n["id"], "id");
    if (!n["kind"]) {
      schema(n, "subsystem needs 'kind'");
    } else {
      const std::string k = text(n["kind"], "kind");
      if (auto kind = parse_kind(k)) {
        s.kind = *kind;
      } else {
        schema(n["kind"], "unknown subsystem kind '" + k + "'", ViolationCode::UnknownFamily);
      }
    }
    if (n["model"]) s.model = text(n["model"], "model");
    if (const YAML::Node p = n["params"]) {
      if (!p.IsMap()) {
        schema(p, "'params' must be a mapping of names to numbers");
      } else {
        for (const auto& kv : p) {
          const auto key = kv.first.as<std::string>();
          s.params[key] = real(kv.second, key);
        }
      }
    }
    if (s.kind == SubsystemKind::SrnaFeedback) {
      static const std::set<std::string> keys{"alpha", "lambda", "beta", "kappa", "delta", "delta0", "epsilon"};
      for (const auto& [key, value] : s.params) {
        if (!keys.count(key)) schema(n["params"], "unknown srna-feedback parameter '" + key + "'");
      }
    }
    // epsilon may sit at the subsystem level or among the params.
    if (auto it = s.params.find("epsilon"); it != s.params.end()) {
      s.epsilon = it->second;
      s.params.erase(it);
    }
    if (n["epsilon"]) s.epsilon = real(n["epsilon"], "epsilon");
    if (shared_nu) s.nu = *shared_nu;
    if (n["nu"]) s.nu = real(n["nu"], "nu");
    if (n["state_dim"]) s.state_dim = integer(n["state_dim"], "state_dim");
    if (n["fast_dim"]) s.fast_dim = integer(n["fast_dim"], "fast_dim");
    if (const YAML::Node a = n["admissible_reference"]) {
      if (!a.IsSequence() || a.size() != 2) {
        schema(a, "'admissible_reference' must be [lower, upper]");
      } else {
        s.admissible_reference = std::make_pair(real(a[0], "admissible_reference"), real(a[1], "admissible_reference"));
      }
    }
    return s;
  }

  Edge edge(const YAML::Node& n) {
    Edge e;
    if (!n.IsMap()) {
      schema(n, "edge entry must be a mapping");
      return e;
    }
    allow_keys(n, {"from", "to", "type", "B", "k", "n", "r_star", "gain", "offset"});
    if (n["from"]) e.from = integer(n["from"], "from");
    if (!n["to"]) schema(n, "edge needs 'to'");
    else e.to = integer(n["to"], "to");
    const std::string type = n["type"] ? text(n["type"], "type") : std::string("constant");
    if (auto t = parse_edge_type(type)) {
      e.type = *t;
    } else {
      schema(n["type"], "unknown edge type '" + type + "'");
    }
    auto need = [&](const char* key, double& dst) {
      if (n[key]) dst = real(n[key], key);
      else schema(n, std::string(type) + " edge needs '" + key + "'");
    };
    switch (e.type) {
      case EdgeType::Hill: need("B", e.B); need("k", e.k); need("n", e.n); break;
      case EdgeType::Constant: need("r_star", e.r_star); break;
      case EdgeType::Affine:
        need("gain", e.gain);
        if (n["offset"]) e.offset = real(n["offset"], "offset");
        break;
    }
    return e;
  }

  UnintendedMap unintended(const YAML::Node& n) {
    UnintendedMap u;
    std::string kind;
    YAML::Node body;
    if (n.IsScalar()) {
      kind = n.Scalar();
    } else if (n.IsMap()) {
      allow_keys(n, {"kind", "M"});
      kind = n["kind"] ? text(n["kind"], "kind") : std::string("matrix");
      body = n["M"];
    } else {
      schema(n, "'unintended' must be a kind name or a mapping");
      return u;
    }
    if (kind == "none") {
      u.kind = UnintendedKind::None;
    } else if (kind == "resource-competition") {
      u.kind = UnintendedKind::ResourceCompetition;
    } else if (kind == "matrix") {
      u.kind = UnintendedKind::Matrix;
      if (!body || !body.IsSequence()) {
        schema(n, "matrix unintended map needs 'M' as a list of rows");
        return u;
      }
      const auto rows = static_cast<Eigen::Index>(body.size());
      const auto cols = rows > 0 && body[0].IsSequence() ? static_cast<Eigen::Index>(body[0].size()) : 0;
      u.custom = Matrix::Zero(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i) {
        const YAML::Node row = body[static_cast<std::size_t>(i)];
        if (!row.IsSequence() || static_cast<Eigen::Index>(row.size()) != cols) {
          schema(row, "rows of 'M' must all have " + std::to_string(cols) + " entries");
          continue;
        }
        for (Eigen::Index j = 0; j < cols; ++j) u.custom(i, j) = real(row[static_cast<std::size_t>(j)], "M");
      }
    } else {
      schema(n, "unknown unintended map '" + kind + "'");
    }
    return u;
  }

  SimulationConfig simulation(const YAML::Node& n) {
    SimulationConfig c;
    if (!n.IsMap()) {
      schema(n, "'simulation' must be a mapping");
      return c;
    }
    allow_keys(n, {"t_final", "initial_state", "solver", "rel_tol", "abs_tol", "steady_state_window",
                   "steady_state_threshold", "fixed_step", "output_points", "max_horizon_doublings"});
    if (n["t_final"]) c.t_final = real(n["t_final"], "t_final");
    if (const YAML::Node x0 = n["initial_state"]) {
      if (x0.IsScalar() && x0.Scalar() == "default") {
        c.initial_state.reset();
      } else if (x0.IsSequence()) {
        std::vector<double> v;
        for (const auto& e : x0) v.push_back(real(e, "initial_state"));
        c.initial_state = v;
      } else {
        schema(x0, "'initial_state' must be \"default\" or a list of numbers");
      }
    }
    if (n["solver"]) {
      const std::string s = text(n["solver"], "solver");
      if (s == "adaptive-embedded") c.solver = SolverKind::AdaptiveEmbedded;
      else if (s == "fixed-step") c.solver = SolverKind::FixedStep;
      else schema(n["solver"], "unknown solver '" + s + "'");
    }
    if (n["rel_tol"]) c.rel_tol = real(n["rel_tol"], "rel_tol");
    if (n["abs_tol"]) c.abs_tol = real(n["abs_tol"], "abs_tol");
    if (n["steady_state_window"]) c.steady_state_window = real(n["steady_state_window"], "steady_state_window");
    if (n["steady_state_threshold"])
      c.steady_state_threshold = real(n["steady_state_threshold"], "steady_state_threshold");
    if (n["fixed_step"]) c.fixed_step = real(n["fixed_step"], "fixed_step");
    if (n["output_points"]) c.output_points = static_cast<std::size_t>(integer(n["output_points"], "output_points"));
    if (n["max_horizon_doublings"]) c.max_horizon_doublings = integer(n["max_horizon_doublings"], "max_horizon_doublings");
    if (!(c.t_final > 0.0)) schema(n, "t_final must be positive", ViolationCode::InvalidParameter);
    if (!(c.rel_tol > 0.0) || !(c.abs_tol > 0.0)) schema(n, "tolerances must be positive", ViolationCode::InvalidParameter);
    if (!(c.steady_state_threshold > 0.0))
      schema(n, "steady_state_threshold must be positive", ViolationCode::InvalidParameter);
    if (c.output_points < 2) schema(n, "output_points must be at least 2", ViolationCode::InvalidParameter);
    return c;
  }
};

}  // namespace detail

/// Parses and validates a config document. `source` names it in messages.
inline Config parse_config_string(const std::string& text, const std::string& source = "<config>") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ValidationError({{ViolationCode::Schema, e.msg,
                            source + ":line " + std::to_string(e.mark.line + 1) + ", column " +
                                std::to_string(e.mark.column + 1)}});
  }
  return detail::ConfigReader(source).read(root);
}

inline Config parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str(), path);
}

/// Emits a config that parses back to an equal Config.
inline std::string to_yaml(const Config& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  if (cfg.network.disturbance_bound) out << YAML::Key << "disturbance_bound" << YAML::Value << *cfg.network.disturbance_bound;
  out << YAML::Key << "subsystems" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : cfg.network.subsystems) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << s.id;
    out << YAML::Key << "kind" << YAML::Value << to_string(s.kind);
    if (!s.model.empty()) out << YAML::Key << "model" << YAML::Value << s.model;
    out << YAML::Key << "params" << YAML::Value << YAML::Flow << YAML::BeginMap;
    for (const auto& [k, v] : s.params) out << YAML::Key << k << YAML::Value << v;
    out << YAML::EndMap;
    out << YAML::Key << "epsilon" << YAML::Value << s.epsilon;
    out << YAML::Key << "nu" << YAML::Value << s.nu;
    if (s.state_dim) out << YAML::Key << "state_dim" << YAML::Value << s.state_dim;
    if (s.fast_dim) out << YAML::Key << "fast_dim" << YAML::Value << s.fast_dim;
    if (s.admissible_reference) {
      out << YAML::Key << "admissible_reference" << YAML::Value << YAML::Flow << YAML::BeginSeq
          << s.admissible_reference->first << s.admissible_reference->second << YAML::EndSeq;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "edges" << YAML::Value << YAML::BeginSeq;
  for (const auto& e : cfg.network.edges) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "from" << YAML::Value << e.from << YAML::Key << "to" << YAML::Value << e.to;
    out << YAML::Key << "type" << YAML::Value << to_string(e.type);
    switch (e.type) {
      case EdgeType::Hill:
        out << YAML::Key << "B" << YAML::Value << e.B << YAML::Key << "k" << YAML::Value << e.k << YAML::Key << "n"
            << YAML::Value << e.n;
        break;
      case EdgeType::Constant: out << YAML::Key << "r_star" << YAML::Value << e.r_star; break;
      case EdgeType::Affine:
        out << YAML::Key << "gain" << YAML::Value << e.gain << YAML::Key << "offset" << YAML::Value << e.offset;
        break;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "unintended" << YAML::Value;
  if (cfg.network.unintended.kind == UnintendedKind::Matrix) {
    const Matrix& m = cfg.network.unintended.custom;
    out << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << "matrix" << YAML::Key << "M" << YAML::Value
        << YAML::BeginSeq;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      out << YAML::Flow << YAML::BeginSeq;
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << m(i, j);
      out << YAML::EndSeq;
    }
    out << YAML::EndSeq << YAML::EndMap;
  } else {
    out << to_string(cfg.network.unintended.kind);
  }
  const auto& c = cfg.simulation;
  out << YAML::Key << "simulation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "t_final" << YAML::Value << c.t_final;
  out << YAML::Key << "initial_state" << YAML::Value;
  if (c.initial_state) out << YAML::Flow << *c.initial_state;
  else out << "default";
  out << YAML::Key << "solver" << YAML::Value << to_string(c.solver);
  out << YAML::Key << "rel_tol" << YAML::Value << c.rel_tol;
  out << YAML::Key << "abs_tol" << YAML::Value << c.abs_tol;
  out << YAML::Key << "steady_state_window" << YAML::Value << c.steady_state_window;
  out << YAML::Key << "steady_state_threshold" << YAML::Value << c.steady_state_threshold;
  out << YAML::Key << "fixed_step" << YAML::Value << c.fixed_step;
  out << YAML::Key << "output_points" << YAML::Value << c.output_points;
  out << YAML::Key << "max_horizon_doublings" << YAML::Value << c.max_horizon_doublings;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace ndd
