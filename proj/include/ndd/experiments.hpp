#pragma once

// Canned reproduction recipes. Each writes CSV tables, SVG plots, a
// certificate report and a JSON manifest into its own directory. Tables hold
// no wall-clock data (that goes to timing.csv), so reruns are byte-identical.

#include "ndd/certification.hpp"
#include "ndd/config.hpp"
#include "ndd/netsim.hpp"
#include "ndd/networks.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#ifndef NDD_VERSION
#define NDD_VERSION "0.1.0"
#endif

namespace ndd {

inline constexpr const char* kToolVersion = NDD_VERSION;

/// Logarithmic grid from `hi` down to `lo` with `per_decade` points per decade,
/// endpoints included.
inline std::vector<double> log_grid(double hi, double lo, int per_decade) {
  if (!(hi > 0.0 && lo > 0.0 && per_decade > 0)) throw Error("log_grid needs positive bounds and density");
  const double decades = std::log10(hi / lo);
  const int steps = static_cast<int>(std::lround(decades * per_decade));
  std::vector<double> g;
  for (int k = 0; k <= steps; ++k) g.push_back(hi * std::pow(10.0, -decades * k / std::max(steps, 1)));
  if (steps == 0) g.resize(1);
  return g;
}

/// Shortest decimal text that reads back to the same double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// ---------------------------------------------------------------------------
// SVG line plots

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
  std::vector<bool> hollow;  // per point; empty = all filled
};

struct PlotMarker {
  double x = 0.0;
  std::string label;
};

struct LinePlot {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<PlotSeries> series;
  std::vector<PlotMarker> vlines;
  std::string note;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return colors[i % 8];
}

inline std::vector<double> ticks(double lo, double hi, bool log) {
  std::vector<double> t;
  if (log) {
    for (double e = std::floor(lo); e <= std::ceil(hi) + 1e-9; e += 1.0)
      if (e >= lo - 1e-9 && e <= hi + 1e-9) t.push_back(e);
    return t;
  }
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(v);
  return t;
}

}  // namespace detail

inline std::string render_svg(const LinePlot& p) {
  const double W = 720, H = 480, L = 80, R = 170, T = 40, B = 60;
  auto tx = [&](double v) { return p.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return p.logy ? std::log10(v) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : p.series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.y[k]) || (p.logy && s.y[k] <= 0) || (p.logx && s.x[k] <= 0)) continue;
      x0 = std::min(x0, tx(s.x[k]));
      x1 = std::max(x1, tx(s.x[k]));
      y0 = std::min(y0, ty(s.y[k]));
      y1 = std::max(y1, ty(s.y[k]));
    }
  }
  for (const auto& m : p.vlines) {
    x0 = std::min(x0, tx(m.x));
    x1 = std::max(x1, tx(m.x));
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  if (p.logy) {
    y0 = std::floor(y0);
    y1 = std::ceil(y1);
  } else {
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
  }
  if (p.logx) {
    x0 = std::floor(x0);
    x1 = std::ceil(x1);
  }
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };
  auto pxr = [&](double t) { return L + (t - x0) / (x1 - x0) * (W - L - R); };
  auto pyr = [&](double t) { return H - B - (t - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << (L + (W - L - R) / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << detail::xml_escape(p.title) << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << (W - L - R) << "\" height=\"" << (H - T - B)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : detail::ticks(x0, x1, p.logx)) {
    const double x = pxr(t);
    o << "<line x1=\"" << fmt(x) << "\" y1=\"" << (H - B) << "\" x2=\"" << fmt(x) << "\" y2=\"" << (H - B + 5)
      << "\" stroke=\"black\"/>";
    o << "<text x=\"" << fmt(x) << "\" y=\"" << (H - B + 18) << "\" text-anchor=\"middle\">"
      << (p.logx ? "1e" + fmt(t) : fmt(t)) << "</text>\n";
  }
  for (double t : detail::ticks(y0, y1, p.logy)) {
    const double y = pyr(t);
    o << "<line x1=\"" << (L - 5) << "\" y1=\"" << fmt(y) << "\" x2=\"" << L << "\" y2=\"" << fmt(y)
      << "\" stroke=\"black\"/>";
    o << "<text x=\"" << (L - 8) << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">"
      << (p.logy ? "1e" + fmt(t) : fmt(t)) << "</text>\n";
  }
  o << "<text x=\"" << (L + (W - L - R) / 2) << "\" y=\"" << (H - 15) << "\" text-anchor=\"middle\">"
    << detail::xml_escape(p.xlabel) << "</text>\n";
  o << "<text transform=\"translate(18," << (T + (H - T - B) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << detail::xml_escape(p.ylabel) << "</text>\n";
  for (const auto& m : p.vlines) {
    const double x = px(m.x);
    o << "<line x1=\"" << fmt(x) << "\" y1=\"" << T << "\" x2=\"" << fmt(x) << "\" y2=\"" << (H - B)
      << "\" stroke=\"#555\" stroke-dasharray=\"6,4\"/>";
    o << "<text x=\"" << fmt(x + 4) << "\" y=\"" << (T + 14) << "\">" << detail::xml_escape(m.label) << "</text>\n";
  }
  for (std::size_t i = 0; i < p.series.size(); ++i) {
    const auto& s = p.series[i];
    const char* c = detail::palette(i);
    std::string path;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.y[k]) || (p.logy && s.y[k] <= 0)) continue;
      path += (path.empty() ? "M" : " L") + fmt(px(s.x[k])) + "," + fmt(py(s.y[k]));
    }
    if (!path.empty()) o << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\"/>\n";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.y[k]) || (p.logy && s.y[k] <= 0)) continue;
      const bool hollow = !s.hollow.empty() && s.hollow[k];
      o << "<circle cx=\"" << fmt(px(s.x[k])) << "\" cy=\"" << fmt(py(s.y[k])) << "\" r=\"3.5\" fill=\""
        << (hollow ? "white" : c) << "\" stroke=\"" << c << "\"/>\n";
    }
    const double ly = T + 12 + 18.0 * static_cast<double>(i);
    o << "<line x1=\"" << (W - R + 12) << "\" y1=\"" << ly << "\" x2=\"" << (W - R + 32) << "\" y2=\"" << ly
      << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>";
    o << "<text x=\"" << (W - R + 38) << "\" y=\"" << (ly + 4) << "\">" << detail::xml_escape(s.name) << "</text>\n";
  }
  if (!p.note.empty()) {
    o << "<text x=\"" << (W - R + 12) << "\" y=\"" << (H - B) << "\" font-size=\"10\">" << detail::xml_escape(p.note)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Grid runs

struct GridPoint {
  double r0 = 0.0;  // external reference, 0 when the recipe has a fixed one
  double epsilon = 0.1;
  double nu = 1.0;
  std::string group;  // series the point belongs to in tables and plots
};

struct PointResult {
  GridPoint point;
  bool converged = false;
  double ndd_error = std::numeric_limits<double>::quiet_NaN();
  double trailing_sup = std::numeric_limits<double>::quiet_NaN();
  Vector y_nominal, y_perturbed;
  double seconds = 0.0;
  std::string message;
};

using NetworkFactory = std::function<NetworkDescriptor(const GridPoint&)>;

/// measure_ndd at every point, in parallel, results in input order.
inline std::vector<PointResult> run_grid(const NetworkFactory& make, const std::vector<GridPoint>& grid,
                                         const SimulationConfig& cfg = {}) {
  return parallel_map(grid.size(), [&](std::size_t k) {
    PointResult row;
    row.point = grid[k];
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto run = measure_ndd(make(grid[k]), cfg);
      row.converged = run.converged;
      row.ndd_error = run.error;
      row.trailing_sup = run.trailing_sup;
      row.y_nominal = run.nominal.steady.y;
      row.y_perturbed = run.perturbed.steady.y;
      row.message = run.message;
    } catch (const std::exception& e) {
      row.message = e.what();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
  });
}

// ---------------------------------------------------------------------------
// Recipes

struct ExperimentRecipe {
  std::string name;
  std::string description;
  NetworkFactory network;
  std::vector<GridPoint> grid;
  // Points whose network is certified; labels key the certificate report.
  std::vector<std::pair<std::string, GridPoint>> certify;
  std::string grid_note;
  std::optional<GridPoint> trajectory;  // also write nominal/perturbed trajectories here
};

struct RecipeOptions {
  std::string out_dir = "results";
  SimulationConfig simulation;
  std::optional<std::vector<double>> epsilon_grid;  // overrides the default eps grid
};

struct RecipeResult {
  std::string name;
  std::string dir;
  std::vector<PointResult> points;
  std::vector<std::pair<std::string, NddCertificate>> certificates;
  std::vector<std::string> files;

  std::vector<const PointResult*> group(const std::string& g) const {
    std::vector<const PointResult*> out;
    for (const auto& p : points)
      if (p.point.group == g) out.push_back(&p);
    return out;
  }
  const NddCertificate* certificate(const std::string& label) const {
    for (const auto& [l, c] : certificates)
      if (l == label) return &c;
    return nullptr;
  }
};

inline std::vector<std::string> recipe_names() { return {"fig2b", "fig4b", "fig4c", "indep-triple", "cascade"}; }

inline const std::vector<double>& fig2b_references() {
  static const std::vector<double> r{5, 10, 20, 30, 40, 60};
  return r;
}

namespace detail {

inline std::string group_name(const char* prefix, double v) { return std::string(prefix) + fmt(v); }

inline std::vector<GridPoint> cascade_grid(const std::optional<std::vector<double>>& eps_override) {
  std::vector<GridPoint> g;
  // Paired (eps, nu = eps/10): the cascade settles to equilibrium there.
  for (double e : eps_override.value_or(log_grid(0.1, 1e-3, 5))) g.push_back({0.0, e, e / 10.0, "paired"});
  // nu sweep at eps = 0.1: oscillating for nu >= 0.3, converged below.
  for (double nu : {1.0, 0.3, 0.1, 0.03, 0.01}) g.push_back({0.0, 0.1, nu, "nu-sweep"});
  return g;
}

inline const char* kCascadeNote =
    "eps grid log-spaced at 5 points per decade; nu = eps/10 on the paired grid because the coupled cascade "
    "has a limit cycle for nu of order eps or larger; the nu sweep at eps = 0.1 shows that regime "
    "(non-converged points report the trailing-window sup of |y - y_nominal| instead of a steady-state error)";

}  // namespace detail

inline ExperimentRecipe make_recipe(const std::string& name, const RecipeOptions& opt = {}) {
  ExperimentRecipe r;
  r.name = name;
  if (name == "fig2b") {
    r.description = "three identical sRNA subsystems under resource competition; error vs eps for several references";
    r.network = [](const GridPoint& p) { return independent_srna_network(3, p.r0, p.epsilon, p.nu); };
    const auto eps = opt.epsilon_grid.value_or(log_grid(0.1, 1e-4, 5));
    for (double r0 : fig2b_references()) {
      for (double e : eps) r.grid.push_back({r0, e, 1.0, detail::group_name("r0=", r0)});
      r.certify.push_back({detail::group_name("r0=", r0), {r0, 0.01, 1.0, {}}});
    }
    r.grid_note = "eps grid log-spaced at 5 points per decade over three decades; nu = 1";
  } else if (name == "fig4b" || name == "fig4c") {
    const bool b = name == "fig4b";
    r.description = b ? "five-subsystem sRNA Hill cascade, B = 10 on every edge"
                      : "five-subsystem sRNA Hill cascade, B2 = 10 and B3..B5 = 50";
    r.network = [b](const GridPoint& p) { return b ? fig4b_cascade(p.epsilon, p.nu) : fig4c_cascade(p.epsilon, p.nu); };
    r.grid = detail::cascade_grid(opt.epsilon_grid);
    r.certify.push_back({"eps=0.01", {0.0, 0.01, 0.001, {}}});
    r.grid_note = detail::kCascadeNote;
  } else if (name == "indep-triple") {
    r.description = "three identical sRNA subsystems at r0 = 10, error vs eps and one trajectory";
    r.network = [](const GridPoint& p) { return independent_srna_network(3, p.r0, p.epsilon, p.nu); };
    for (double e : opt.epsilon_grid.value_or(log_grid(0.1, 1e-3, 5))) r.grid.push_back({10.0, e, 1.0, "r0=10"});
    r.certify.push_back({"r0=10", {10.0, 0.01, 1.0, {}}});
    r.trajectory = GridPoint{10.0, 0.01, 1.0, {}};
    r.grid_note = "eps grid log-spaced at 5 points per decade over two decades; nu = 1";
  } else if (name == "cascade") {
    r.description = "B = 10 sRNA cascade at eps = 0.01, nu = 0.001: trajectories with and without coupling";
    r.network = [](const GridPoint& p) { return fig4b_cascade(p.epsilon, p.nu); };
    r.grid.push_back({0.0, 0.01, 0.001, "single"});
    r.certify.push_back({"eps=0.01", {0.0, 0.01, 0.001, {}}});
    r.trajectory = GridPoint{0.0, 0.01, 0.001, {}};
    r.grid_note = "single operating point";
  } else {
    throw Error("unknown recipe '" + name + "'");
  }
  return r;
}

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& text, RecipeResult& res) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << text;
  res.files.push_back(p.filename().string());
}

inline std::string points_csv(const std::vector<PointResult>& pts) {
  Eigen::Index n = 0;
  for (const auto& p : pts) n = std::max({n, p.y_nominal.size(), p.y_perturbed.size()});
  std::ostringstream o;
  o << "group,r0,epsilon,nu,ndd_error,converged,trailing_sup";
  for (Eigen::Index i = 0; i < n; ++i) o << ",y_nominal_" << i + 1;
  for (Eigen::Index i = 0; i < n; ++i) o << ",y_perturbed_" << i + 1;
  o << "\n";
  auto cell = [](const Vector& v, Eigen::Index i) { return i < v.size() ? fmt(v[i]) : std::string("nan"); };
  for (const auto& p : pts) {
    o << p.point.group << "," << fmt(p.point.r0) << "," << fmt(p.point.epsilon) << "," << fmt(p.point.nu) << ","
      << fmt(p.ndd_error) << "," << (p.converged ? 1 : 0) << "," << fmt(p.trailing_sup);
    for (Eigen::Index i = 0; i < n; ++i) o << "," << cell(p.y_nominal, i);
    for (Eigen::Index i = 0; i < n; ++i) o << "," << cell(p.y_perturbed, i);
    o << "\n";
  }
  return o.str();
}

inline std::string timing_csv(const std::vector<PointResult>& pts) {
  std::ostringstream o;
  o << "group,r0,epsilon,nu,seconds,message\n";
  for (const auto& p : pts) {
    std::string msg = p.message;
    for (char& c : msg)
      if (c == ',' || c == '\n') c = ';';
    o << p.point.group << "," << fmt(p.point.r0) << "," << fmt(p.point.epsilon) << "," << fmt(p.point.nu) << ","
      << p.seconds << "," << msg << "\n";
  }
  return o.str();
}

inline std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream o;
  const auto n = tr.y.empty() ? 0 : tr.y.front().size();
  const auto nx = tr.states.empty() ? 0 : tr.states.front().size();
  o << "t";
  for (Eigen::Index i = 0; i < nx; ++i) o << ",x" << i + 1;
  for (const char* s : {"y", "d", "w"})
    for (Eigen::Index i = 0; i < n; ++i) o << "," << s << i + 1;
  o << "\n";
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    o << fmt(tr.times[k]);
    for (Eigen::Index i = 0; i < nx; ++i) o << "," << fmt(tr.states[k][i]);
    for (const auto* v : {&tr.y[k], &tr.d[k], &tr.w[k]})
      for (Eigen::Index i = 0; i < n; ++i) o << "," << fmt((*v)[i]);
    o << "\n";
  }
  return o.str();
}

/// Error to plot: the steady-state error when converged, else the trailing sup.
inline double plotted_error(const PointResult& p) { return p.converged ? p.ndd_error : p.trailing_sup; }

inline PlotSeries series_over(const std::vector<const PointResult*>& pts, const std::string& name,
                              double GridPoint::*axis) {
  PlotSeries s;
  s.name = name;
  for (const auto* p : pts) {
    s.x.push_back(p->point.*axis);
    s.y.push_back(plotted_error(*p));
    s.hollow.push_back(!p->converged);
  }
  return s;
}

}  // namespace detail

/// Runs a recipe and writes its artifacts under opt.out_dir/<name>/.
inline RecipeResult run_recipe(const ExperimentRecipe& recipe, const RecipeOptions& opt = {}) {
  namespace fs = std::filesystem;
  RecipeResult res;
  res.name = recipe.name;
  const fs::path dir = fs::path(opt.out_dir) / recipe.name;
  fs::create_directories(dir);
  res.dir = dir.string();

  res.points = run_grid(recipe.network, recipe.grid, opt.simulation);
  auto certs = parallel_map(recipe.certify.size(), [&](std::size_t k) {
    return certify_ndd_detailed(recipe.network(recipe.certify[k].second));
  });
  for (std::size_t k = 0; k < certs.size(); ++k) res.certificates.emplace_back(recipe.certify[k].first, certs[k]);

  detail::write_file(dir / "errors.csv", detail::points_csv(res.points), res);
  detail::write_file(dir / "timing.csv", detail::timing_csv(res.points), res);

  nlohmann::json cj = nlohmann::json::object();
  for (const auto& [label, c] : res.certificates) cj[label] = to_json(c);
  detail::write_file(dir / "certificate.json", cj.dump(2) + "\n", res);

  // Plots.
  std::vector<std::string> groups;
  for (const auto& p : res.points)
    if (std::find(groups.begin(), groups.end(), p.point.group) == groups.end()) groups.push_back(p.point.group);
  LinePlot eps_plot{recipe.name + ": disturbance error vs eps", "eps", "||y_ss - y_nominal||_inf", true, true, {}, {}, {}};
  eps_plot.note = "hollow: not settled (trailing sup)";
  for (const auto& g : groups) {
    if (g == "nu-sweep") continue;
    eps_plot.series.push_back(detail::series_over(res.group(g), g, &GridPoint::epsilon));
  }
  detail::write_file(dir / "error_vs_epsilon.svg", render_svg(eps_plot), res);

  if (recipe.name == "fig2b") {
    LinePlot rp{"fig2b: smallest error over the eps grid vs r0", "r0", "min error", false, true, {}, {}, {}};
    PlotSeries s;
    s.name = "min over eps";
    for (const auto& g : groups) {
      const auto pts = res.group(g);
      double best = INFINITY;
      for (const auto* p : pts) best = std::min(best, detail::plotted_error(*p));
      s.x.push_back(pts.front()->point.r0);
      s.y.push_back(best);
    }
    rp.series.push_back(s);
    rp.vlines.push_back({uniform_reference_boundary(3, 100.0, 1.0, 1.0), "r0 = 100/3"});
    detail::write_file(dir / "min_error_vs_r0.svg", render_svg(rp), res);
  }
  if (!res.group("nu-sweep").empty()) {
    LinePlot np{recipe.name + ": error vs nu at eps = 0.1", "nu", "error", true, true, {}, {}, {}};
    np.note = "hollow: not settled (trailing sup)";
    np.series.push_back(detail::series_over(res.group("nu-sweep"), "eps=0.1", &GridPoint::nu));
    detail::write_file(dir / "error_vs_nu.svg", render_svg(np), res);
  }

  if (recipe.trajectory) {
    const auto net = recipe.network(*recipe.trajectory);
    SimulationConfig cfg = opt.simulation;
    cfg.t_final = std::min(cfg.t_final, 100.0);
    const auto with = integrate_network(net, cfg, true);
    const auto without = integrate_network(net, cfg, false);
    detail::write_file(dir / "trajectory.csv", detail::trajectory_csv(with), res);
    detail::write_file(dir / "trajectory_nominal.csv", detail::trajectory_csv(without), res);
    LinePlot tp{recipe.name + ": outputs over time", "t", "y", false, false, {}, {}, {}};
    for (Eigen::Index i = 0; i < with.y.front().size(); ++i) {
      PlotSeries a, b;
      a.name = "y" + std::to_string(i + 1) + " coupled";
      b.name = "y" + std::to_string(i + 1) + " nominal";
      for (std::size_t k = 0; k < with.times.size(); ++k) {
        a.x.push_back(with.times[k]);
        a.y.push_back(with.y[k][i]);
      }
      for (std::size_t k = 0; k < without.times.size(); ++k) {
        b.x.push_back(without.times[k]);
        b.y.push_back(without.y[k][i]);
      }
      tp.series.push_back(a);
      tp.series.push_back(b);
    }
    detail::write_file(dir / "trajectory.svg", render_svg(tp), res);
  }

  // Manifest: everything needed to rerun, nothing time-dependent.
  nlohmann::json m;
  m["recipe"] = recipe.name;
  m["description"] = recipe.description;
  m["tool_version"] = kToolVersion;
  m["grid_note"] = recipe.grid_note;
  m["random_seeds"] = "none (all runs deterministic)";
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& p : recipe.grid)
    grid.push_back({{"group", p.group}, {"r0", p.r0}, {"epsilon", p.epsilon}, {"nu", p.nu}});
  m["grid"] = grid;
  const GridPoint base = recipe.certify.empty() ? recipe.grid.front() : recipe.certify.front().second;
  m["base_network"] = to_yaml(Config{recipe.network(base), opt.simulation});
  const auto& c = opt.simulation;
  m["simulation"] = {{"t_final", c.t_final},
                     {"solver", to_string(c.solver)},
                     {"rel_tol", c.rel_tol},
                     {"abs_tol", c.abs_tol},
                     {"steady_state_window", c.steady_state_window},
                     {"steady_state_threshold", c.steady_state_threshold},
                     {"max_horizon_doublings", c.max_horizon_doublings},
                     {"output_points", c.output_points}};
  nlohmann::json certs_j = nlohmann::json::object();
  for (const auto& [label, cc] : recipe.certify) {
    certs_j[label] = {{"r0", cc.r0}, {"epsilon_ladder", CertifyOptions{}.epsilon_ladder}, {"nu", cc.nu}};
  }
  m["certified_points"] = certs_j;
  res.files.push_back("manifest.json");
  m["files"] = res.files;
  std::ofstream(dir / "manifest.json", std::ios::binary) << m.dump(2) << "\n";
  return res;
}

inline RecipeResult run_recipe(const std::string& name, const RecipeOptions& opt = {}) {
  return run_recipe(make_recipe(name, opt), opt);
}

}  // namespace ndd
