#include "ndd/ndd.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace ndd;

struct UsageError : Error {
  using Error::Error;
};

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kNumerical = 3 };

std::vector<double> split_numbers(const std::string& s, char sep) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad number '" + item + "' in grid spec '" + s + "'");
    }
  }
  return v;
}

// Axis grid: "a,b,c" | "lo:hi:count" (linear) | "log:hi:lo:per_decade".
std::vector<double> parse_axis(const std::string& spec) {
  if (spec.rfind("log:", 0) == 0) {
    const auto p = split_numbers(spec.substr(4), ':');
    if (p.size() != 3) throw UsageError("log grid needs log:hi:lo:per_decade, got '" + spec + "'");
    return log_grid(std::max(p[0], p[1]), std::min(p[0], p[1]), static_cast<int>(p[2]));
  }
  if (spec.find(':') != std::string::npos) {
    const auto p = split_numbers(spec, ':');
    if (p.size() != 3 || p[2] < 1) throw UsageError("linear grid needs lo:hi:count, got '" + spec + "'");
    const int n = static_cast<int>(p[2]);
    std::vector<double> g;
    for (int k = 0; k < n; ++k) g.push_back(n == 1 ? p[0] : p[0] + (p[1] - p[0]) * k / (n - 1));
    return g;
  }
  auto g = split_numbers(spec, ',');
  if (g.empty()) throw UsageError("empty grid spec");
  return g;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw UsageError("cannot write '" + path + "'");
  return file;
}

Config load(const std::string& path) {
  if (!std::filesystem::exists(path)) throw UsageError("config '" + path + "' does not exist");
  return parse_config(path);
}

void print_pattern(const SignPattern& p, const IncidenceGraph& g) {
  std::cout << "      " << std::setw(6) << "";
  for (const auto& c : g.labels) std::cout << std::setw(4) << c;
  std::cout << "\n";
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    std::cout << "      " << std::setw(6) << ("d" + g.labels[static_cast<std::size_t>(i)] + "/dt");
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const int s = p.signs(i, j);
      std::cout << std::setw(4) << (s > 0 ? "+" : s < 0 ? "-" : "0");
    }
    std::cout << "\n";
  }
}

std::string signs_text(const SignVector& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::string(i ? ", " : "") + (v[i] > 0 ? "+1" : "-1");
  return s + ")";
}

void print_verdict(const char* what, const SignPattern& p, const IncidenceGraph& g, const MonotonicityVerdict& v) {
  std::cout << "    " << what << ": " << (v.monotone ? "monotone" : "not monotone") << "\n";
  print_pattern(p, g);
  if (v.monotone) {
    std::cout << "      state order " << signs_text(v.sigma_x) << ", input order " << signs_text(v.sigma_u) << "\n";
  } else {
    std::cout << "      negative cycle: " << v.witness_text(g) << "\n";
  }
}

int cmd_analyze(const std::string& path) {
  const Config cfg = load(path);
  for (const auto& s : cfg.network.subsystems) {
    const auto m = analyze_monotonicity(make_dynamics(s));
    std::cout << "subsystem " << s.id << " (" << to_string(s.kind) << ")\n";
    print_verdict("full model", m.full_pattern, m.full_graph, m.full);
    if (m.reduced) print_verdict("reduced model", *m.reduced_pattern, *m.reduced_graph, *m.reduced);
    if (m.sampled_unbounded) std::cout << "    note: unbounded coordinates sampled on a truncation box\n";
    std::cout << "    verdict: "
              << (m.certified() ? (m.via_reduction() ? "monotone after reduction" : "monotone") : "not monotone")
              << "\n";
  }
  return kOk;
}

int cmd_characterize(const std::string& path, const std::string& grid, const std::string& out) {
  const Config cfg = load(path);
  std::vector<double> rs{0.0}, ws{0.0};
  std::stringstream ss(grid);
  std::string part;
  while (std::getline(ss, part, ';')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw UsageError("grid entries look like r=<axis>;w=<axis>, got '" + part + "'");
    const std::string key = part.substr(0, eq);
    if (key == "r") rs = parse_axis(part.substr(eq + 1));
    else if (key == "w") ws = parse_axis(part.substr(eq + 1));
    else throw UsageError("unknown grid axis '" + key + "'");
  }
  std::ofstream file;
  std::ostream& os = open_out(out, file);
  os << "subsystem,r,w,epsilon,y,d,residual\n";
  for (const auto& s : cfg.network.subsystems) {
    const Dynamics dyn = make_dynamics(s);
    for (double r : rs)
      for (double w : ws) {
        const auto io = static_io(dyn, r, w);
        os << s.id << "," << fmt(r) << "," << fmt(w) << "," << fmt(s.epsilon) << "," << fmt(io.y) << "," << fmt(io.d)
           << "," << fmt(io.residual) << "\n";
      }
  }
  return kOk;
}

int cmd_certify(const std::string& path, const std::string& report) {
  const Config cfg = load(path);
  const auto cert = certify_ndd_detailed(cfg.network);
  std::cout << verdict_tree(cert);
  std::ofstream(report, std::ios::binary) << to_json(cert).dump(2) << "\n";
  std::cout << "report written to " << report << "\n";
  return kOk;
}

int cmd_simulate(const std::string& path, bool no_delta, const std::string& out) {
  const Config cfg = load(path);
  const auto traj = integrate_network(cfg.network, cfg.simulation, !no_delta);
  std::ofstream file;
  open_out(out, file) << detail::trajectory_csv(traj);
  return kOk;
}

int cmd_sweep(const std::string& path, const std::string& axis_name, const std::string& grid, const std::string& out) {
  const Config cfg = load(path);
  const auto axis = parse_sweep_axis(axis_name);
  if (!axis) throw UsageError("unknown axis '" + axis_name + "' (epsilon, nu, epsilon-and-nu, reference)");
  const auto res = sweep(cfg.network, *axis, parse_axis(grid), cfg.simulation);
  std::ofstream file;
  std::ostream& os = open_out(out, file);
  os << "axis_value,ndd_error,converged,seconds\n";
  for (const auto& r : res.rows)
    os << fmt(r.axis_value) << "," << fmt(r.ndd_error) << "," << (r.converged ? 1 : 0) << "," << r.seconds << "\n";
  for (const auto& r : res.rows)
    if (!r.message.empty()) std::cerr << to_string(*axis) << " = " << fmt(r.axis_value) << ": " << r.message << "\n";
  return kOk;
}

int cmd_reproduce(const std::string& name, const std::string& out, const std::string& eps_grid) {
  const auto names = recipe_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw UsageError("unknown recipe '" + name + "'");
  RecipeOptions opt;
  opt.out_dir = out;
  if (!eps_grid.empty()) opt.epsilon_grid = parse_axis(eps_grid);
  const auto res = run_recipe(name, opt);
  std::size_t failed = 0;
  for (const auto& p : res.points) failed += p.converged ? 0 : 1;
  std::cout << name << ": " << res.points.size() << " grid points, " << failed << " not settled\n";
  for (const auto& [label, c] : res.certificates)
    std::cout << "  certificate " << label << ": " << to_string(c.report.verdict) << "\n";
  std::cout << "  wrote " << res.files.size() << " files to " << res.dir << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network disturbance decoupling: analysis, certification and simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ndd::kToolVersion));

  std::string config, out, grid, axis = "epsilon", report = "certificate.json", recipe, results = "results", eps_grid;
  bool no_delta = false;

  auto* analyze = app.add_subcommand("analyze", "sign patterns and monotonicity verdicts per subsystem");
  analyze->add_option("config", config, "network config")->required();

  auto* characterize = app.add_subcommand("characterize", "static characteristics on an (r, w) grid");
  characterize->add_option("config", config, "network config")->required();
  characterize->add_option("--grid", grid, "r=<axis>;w=<axis>, axis = a,b,c | lo:hi:n | log:hi:lo:per_decade")
      ->required();
  characterize->add_option("-o,--output", out, "CSV file (default stdout)");

  auto* certify = app.add_subcommand("certify", "small-gain certificate for the network");
  certify->add_option("config", config, "network config")->required();
  certify->add_option("--report", report, "JSON report path")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "integrate the network and write the trajectory");
  simulate->add_option("config", config, "network config")->required();
  simulate->add_flag("--no-delta", no_delta, "drop the unintended coupling (w = 0)");
  simulate->add_option("-o,--output", out, "CSV file (default stdout)");

  auto* sweep_cmd = app.add_subcommand("sweep", "disturbance error over a parameter grid");
  sweep_cmd->add_option("config", config, "network config")->required();
  sweep_cmd->add_option("--axis", axis, "epsilon | nu | epsilon-and-nu | reference")->capture_default_str();
  sweep_cmd->add_option("--grid", grid, "a,b,c | lo:hi:n | log:hi:lo:per_decade")->required();
  sweep_cmd->add_option("-o,--output", out, "CSV file (default stdout)");

  auto* reproduce = app.add_subcommand("reproduce", "run a canned recipe");
  reproduce->add_option("recipe", recipe, "fig2b | fig4b | fig4c | indep-triple | cascade")->required();
  reproduce->add_option("--out", results, "output directory")->capture_default_str();
  reproduce->add_option("--eps-grid", eps_grid, "override the eps grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*analyze) return cmd_analyze(config);
    if (*characterize) return cmd_characterize(config, grid, out);
    if (*certify) return cmd_certify(config, report);
    if (*simulate) return cmd_simulate(config, no_delta, out);
    if (*sweep_cmd) return cmd_sweep(config, axis, grid, out);
    if (*reproduce) return cmd_reproduce(recipe, results, eps_grid);
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return kUsage;
  } catch (const ndd::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kValidation;
  } catch (const ndd::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const ndd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kUsage;
}
