#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "nashseek/diagnostics.hpp"
#include "nashseek/integrator.hpp"
#include "nashseek/run.hpp"
#include "nashseek/state.hpp"

namespace nashseek {

// ---------------------------------------------------------------------------
// CSV

/// Trace columns, in order:
///   t, x_i_k, y_i_j_k, then theta_i_j (fixed, node_adaptive) or c_i_j followed
///   by cbar_i_j (edge strategies), then err_consensus, err_nash.
/// Indices are 1-based; i, j run over players and k over action components,
/// each in row-major order.
inline std::vector<std::string> trace_columns(const StateLayout& layout)
{
  std::vector<std::string> cols{"t"};
  const auto id = [](int v) { return std::to_string(v + 1); };
  for (int i = 0; i < layout.n; ++i)
    for (int k = 0; k < layout.d; ++k) cols.push_back("x_" + id(i) + "_" + id(k));
  for (int i = 0; i < layout.n; ++i)
    for (int j = 0; j < layout.n; ++j)
      for (int k = 0; k < layout.d; ++k) cols.push_back("y_" + id(i) + "_" + id(j) + "_" + id(k));
  const std::vector<std::string> gains =
      is_edge_strategy(layout.kind) ? std::vector<std::string>{"c", "cbar"} : std::vector<std::string>{"theta"};
  for (const auto& g : gains)
    for (int i = 0; i < layout.n; ++i)
      for (int j = 0; j < layout.n; ++j) cols.push_back(g + "_" + id(i) + "_" + id(j));
  cols.push_back("err_consensus");
  cols.push_back("err_nash");
  return cols;
}

inline std::string format_double(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trace_csv(std::ostream& out, const SimulationTrace& trace, const StateLayout& layout,
                            const ActionProfile& x_star)
{
  const auto cols = trace_columns(layout);
  if (cols.size() != layout.size() + 3) throw std::logic_error("trace column schema does not match the state layout");
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    const Eigen::VectorXd& s = trace.states[k];
    if (static_cast<std::size_t>(s.size()) != layout.size()) throw std::logic_error("trace row width does not match the schema");
    std::size_t fields = 0;
    out << format_double(trace.times[k]);
    ++fields;
    for (Eigen::Index q = 0; q < s.size(); ++q, ++fields) out << ',' << format_double(s(q));
    const double ec = consensus_error_norm(layout, s);
    const double en = x_star.size() == static_cast<Eigen::Index>(layout.x_size())
                          ? (s.head(x_star.size()) - x_star).norm()
                          : std::numeric_limits<double>::quiet_NaN();
    out << ',' << format_double(ec) << ',' << format_double(en) << '\n';
    fields += 2;
    if (fields != cols.size()) throw std::logic_error("trace row width does not match the schema");
  }
}

inline void write_sweep_rows_csv(std::ostream& out, const SweepResult& r)
{
  out << "parameter,value,seed,converged,verdict_all,failed,final_action_error,final_consensus_error,max_gain,final_time,error\n";
  for (const auto& row : r.rows) {
    std::string err = row.error;
    std::replace(err.begin(), err.end(), ',', ';');
    out << row.parameter << ',' << format_double(row.value) << ',' << row.seed << ',' << row.converged << ','
        << row.verdict_all << ',' << row.failed << ',' << format_double(row.final_action_error) << ','
        << format_double(row.final_consensus_error) << ',' << format_double(row.max_gain) << ','
        << format_double(row.final_time) << ',' << err << '\n';
  }
}

inline void write_sweep_summary_csv(std::ostream& out, const SweepResult& r)
{
  out << "parameter,value,runs,converged,failed,worst_action_error,worst_consensus_error,max_gain\n";
  for (const auto& a : r.aggregates)
    out << a.parameter << ',' << format_double(a.value) << ',' << a.runs << ',' << a.converged << ',' << a.failed << ','
        << format_double(a.worst_action_error) << ',' << format_double(a.worst_consensus_error) << ','
        << format_double(a.max_gain) << '\n';
}

// ---------------------------------------------------------------------------
// SVG

/// Minimal line/scatter plot with autoscaled axes.
class SvgPlot {
public:
  struct Series {
    std::vector<double> xs, ys;
    std::string color;
  };

  SvgPlot(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

  void add_line(std::vector<double> xs, std::vector<double> ys, std::string color)
  {
    lines_.push_back({std::move(xs), std::move(ys), std::move(color)});
  }
  void add_marker(double x, double y, std::string color) { markers_.push_back({{x}, {y}, std::move(color)}); }

  /// Renders at (ox, oy) with the given panel size, as an SVG fragment.
  std::string render_fragment(double ox, double oy, double w, double h) const
  {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto* group : {&lines_, &markers_})
      for (const auto& s : *group)
        for (std::size_t k = 0; k < s.xs.size(); ++k) {
          if (!std::isfinite(s.xs[k]) || !std::isfinite(s.ys[k])) continue;
          x0 = std::min(x0, s.xs[k]);
          x1 = std::max(x1, s.xs[k]);
          y0 = std::min(y0, s.ys[k]);
          y1 = std::max(y1, s.ys[k]);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    const double pad_x = 0.05 * (x1 - x0), pad_y = 0.05 * (y1 - y0);
    x0 -= pad_x, x1 += pad_x, y0 -= pad_y, y1 += pad_y;

    const double ml = 55, mr = 10, mt = 25, mb = 35;
    const double pw = w - ml - mr, ph = h - mt - mb;
    auto px = [&](double x) { return ox + ml + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return oy + mt + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream s;
    s << "<g>\n<rect x='" << ox + ml << "' y='" << oy + mt << "' width='" << pw << "' height='" << ph
      << "' fill='white' stroke='black'/>\n";
    s << "<text x='" << ox + w / 2 << "' y='" << oy + 16 << "' text-anchor='middle' font-size='13'>" << title_ << "</text>\n";
    s << "<text x='" << ox + ml + pw / 2 << "' y='" << oy + h - 5 << "' text-anchor='middle' font-size='11'>" << x_label_
      << "</text>\n";
    s << "<text x='" << ox + 12 << "' y='" << oy + mt + ph / 2 << "' text-anchor='middle' font-size='11' transform='rotate(-90 "
      << ox + 12 << ' ' << oy + mt + ph / 2 << ")'>" << y_label_ << "</text>\n";
    auto tick = [&](double v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3g", v);
      return std::string(buf);
    };
    s << "<text x='" << ox + ml << "' y='" << oy + mt + ph + 14 << "' font-size='10'>" << tick(x0) << "</text>\n";
    s << "<text x='" << ox + ml + pw << "' y='" << oy + mt + ph + 14 << "' font-size='10' text-anchor='end'>" << tick(x1)
      << "</text>\n";
    s << "<text x='" << ox + ml - 3 << "' y='" << oy + mt + ph << "' font-size='10' text-anchor='end'>" << tick(y0) << "</text>\n";
    s << "<text x='" << ox + ml - 3 << "' y='" << oy + mt + 10 << "' font-size='10' text-anchor='end'>" << tick(y1)
      << "</text>\n";
    for (const auto& l : lines_) {
      s << "<polyline fill='none' stroke='" << l.color << "' stroke-width='1.2' points='";
      for (std::size_t k = 0; k < l.xs.size(); ++k)
        if (std::isfinite(l.xs[k]) && std::isfinite(l.ys[k])) s << px(l.xs[k]) << ',' << py(l.ys[k]) << ' ';
      s << "'/>\n";
    }
    for (const auto& m : markers_)
      s << "<circle cx='" << px(m.xs[0]) << "' cy='" << py(m.ys[0]) << "' r='3.5' fill='" << m.color << "'/>\n";
    s << "</g>\n";
    return s.str();
  }

  static std::string document(const std::vector<const SvgPlot*>& panels, double w, double h)
  {
    std::ostringstream s;
    s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w * static_cast<double>(panels.size()) << "' height='" << h
      << "'>\n";
    for (std::size_t k = 0; k < panels.size(); ++k) s << panels[k]->render_fragment(w * static_cast<double>(k), 0, w, h);
    s << "</svg>\n";
    return s.str();
  }

private:
  std::string title_, x_label_, y_label_;
  std::vector<Series> lines_;
  std::vector<Series> markers_;
};

inline std::string palette(int k)
{
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[k % 10];
}

/// Action trajectories: x_i1 against x_i2 (or x_i against t when d = 1), with
/// the equilibrium marked.
inline std::string phase_plot_svg(const SimulationTrace& trace, const StateLayout& layout, const ActionProfile& x_star)
{
  const bool planar = layout.d >= 2;
  SvgPlot plot("player actions", planar ? "x_i1" : "t", planar ? "x_i2" : "x_i");
  for (int i = 0; i < layout.n; ++i) {
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < trace.times.size(); ++k) {
      const auto& s = trace.states[k];
      xs.push_back(planar ? s(static_cast<Eigen::Index>(layout.x_index(i, 0))) : trace.times[k]);
      ys.push_back(s(static_cast<Eigen::Index>(layout.x_index(i, planar ? 1 : 0))));
    }
    plot.add_line(std::move(xs), std::move(ys), palette(i));
    if (planar && x_star.size() == static_cast<Eigen::Index>(layout.x_size()))
      plot.add_marker(x_star(i * layout.d), x_star(i * layout.d + 1), "black");
  }
  return SvgPlot::document({&plot}, 520, 420);
}

inline std::string gains_plot_svg(const SimulationTrace& trace, const StateLayout& layout)
{
  SvgPlot plot(is_edge_strategy(layout.kind) ? "edge gains c_ij, cbar_ij" : "gains theta_ij", "t", "gain");
  const auto g0 = static_cast<Eigen::Index>(layout.gain_offset());
  for (Eigen::Index q = 0; q < static_cast<Eigen::Index>(layout.gain_size()); ++q) {
    std::vector<double> ys;
    for (const auto& s : trace.states) ys.push_back(s(g0 + q));
    plot.add_line(trace.times, std::move(ys), palette(static_cast<int>(q)));
  }
  return SvgPlot::document({&plot}, 620, 420);
}

/// One panel per player i with its estimates y_ij1 against y_ij2 (y_ij
/// against t when d = 1).
inline std::string estimates_plot_svg(const SimulationTrace& trace, const StateLayout& layout)
{
  const bool planar = layout.d >= 2;
  std::vector<SvgPlot> panels;
  for (int i = 0; i < layout.n; ++i) {
    SvgPlot p("player " + std::to_string(i + 1) + " estimates", planar ? "y_ij1" : "t", planar ? "y_ij2" : "y_ij");
    for (int j = 0; j < layout.n; ++j) {
      std::vector<double> xs, ys;
      for (std::size_t k = 0; k < trace.times.size(); ++k) {
        const auto& s = trace.states[k];
        xs.push_back(planar ? s(static_cast<Eigen::Index>(layout.y_index(i, j, 0))) : trace.times[k]);
        ys.push_back(s(static_cast<Eigen::Index>(layout.y_index(i, j, planar ? 1 : 0))));
      }
      p.add_line(std::move(xs), std::move(ys), palette(j));
    }
    panels.push_back(std::move(p));
  }
  std::vector<const SvgPlot*> ptrs;
  for (const auto& p : panels) ptrs.push_back(&p);
  return SvgPlot::document(ptrs, 340, 320);
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json run_report(const RunResult& r, const RunConfig& cfg)
{
  nlohmann::json j;
  j["strategy"] = std::string(to_string(r.layout.kind));
  j["seed"] = cfg.init.seed;
  j["x_star"] = std::vector<double>(r.x_star.data(), r.x_star.data() + r.x_star.size());
  j["stopped_on_thresholds"] = r.trace.converged;
  j["verdict"] = to_json(r.verdict);
  j["steps"] = r.trace.steps;
  j["rejected_steps"] = r.trace.rejected_steps;
  return j;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Writes <prefix>_trace.csv, <prefix>_verdict.json and, when plots is set,
/// <prefix>_phase.svg, <prefix>_gains.svg, <prefix>_estimates.svg into dir.
/// Returns the written paths.
inline std::vector<std::filesystem::path> write_run_artifacts(const std::filesystem::path& dir, const std::string& prefix,
                                                              const SimulationTrace& trace, const StateLayout& layout,
                                                              const ActionProfile& x_star, const nlohmann::json& report,
                                                              bool plots)
{
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto path = [&](const std::string& suffix) { return dir / (prefix + suffix); };
  {
    std::ostringstream csv;
    write_trace_csv(csv, trace, layout, x_star);
    write_text_file(path("_trace.csv"), csv.str());
    written.push_back(path("_trace.csv"));
  }
  write_text_file(path("_verdict.json"), report.dump(2) + "\n");
  written.push_back(path("_verdict.json"));
  if (plots && !trace.empty()) {
    write_text_file(path("_phase.svg"), phase_plot_svg(trace, layout, x_star));
    write_text_file(path("_gains.svg"), gains_plot_svg(trace, layout));
    write_text_file(path("_estimates.svg"), estimates_plot_svg(trace, layout));
    for (const char* s : {"_phase.svg", "_gains.svg", "_estimates.svg"}) written.push_back(path(s));
  }
  return written;
}

}  // namespace nashseek
