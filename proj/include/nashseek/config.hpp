#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "nashseek/errors.hpp"
#include "nashseek/integrator.hpp"
#include "nashseek/state.hpp"

namespace nashseek {

using json = nlohmann::json;

/// Schema or syntax problem in a run configuration, anchored to a line of the
/// source text when one is known (0 otherwise).
class ConfigError : public InputError {
public:
  ConfigError(const std::string& path, const std::string& message, int line = 0)
      : InputError(format(path, message, line)), path_(path), line_(line) {}

  const std::string& path() const noexcept { return path_; }
  int line() const noexcept { return line_; }

private:
  static std::string format(const std::string& path, const std::string& message, int line)
  {
    std::string out = line > 0 ? "line " + std::to_string(line) + ": " : std::string();
    if (!path.empty()) out += path + ": ";
    return out + message;
  }
  std::string path_;
  int line_;
};

/// A scalar broadcast to every (i, j) or an explicit N x N matrix.
struct MatrixParam {
  std::variant<double, std::vector<std::vector<double>>> value = 1.0;

  Eigen::MatrixXd expand(int n) const
  {
    if (const double* s = std::get_if<double>(&value)) return Eigen::MatrixXd::Constant(n, n, *s);
    const auto& rows = std::get<std::vector<std::vector<double>>>(value);
    if (static_cast<int>(rows.size()) != n) throw InputError("matrix parameter must have N rows");
    Eigen::MatrixXd out(n, n);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(rows[i].size()) != n) throw InputError("matrix parameter must have N columns");
      for (int j = 0; j < n; ++j) out(i, j) = rows[i][j];
    }
    return out;
  }
  bool operator==(const MatrixParam&) const = default;
};

struct QuadraticSpec {
  int n_players = 0;
  int action_dim = 1;
  std::vector<std::vector<double>> q;
  std::vector<double> b;
  bool operator==(const QuadraticSpec&) const = default;
};

struct GameSpec {
  std::string registry;  // empty when quadratic is set
  std::optional<QuadraticSpec> quadratic;
  bool operator==(const GameSpec&) const = default;
};

struct GraphSpec {
  std::string preset;  // "ring" | "path" | "complete" | "" (edge list)
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  bool operator==(const GraphSpec&) const = default;
};

struct ScheduleEntry {
  double t = 0.0;
  std::string graph;
  bool operator==(const ScheduleEntry&) const = default;
};

struct TopologySpec {
  std::optional<GraphSpec> graph;            // fixed topology
  std::map<std::string, GraphSpec> graphs;   // named graphs for a schedule
  std::vector<ScheduleEntry> schedule;
  double min_dwell = 0.0;
  bool operator==(const TopologySpec&) const = default;
};

struct StrategySpec {
  StrategyKind kind = StrategyKind::NodeAdaptive;
  std::optional<double> theta;
  std::optional<MatrixParam> theta_bar;
  std::optional<MatrixParam> gamma;
  bool cbar_rate_uses_c = false;
  bool operator==(const StrategySpec&) const = default;
};

using Range = std::pair<double, double>;

struct InitSpec {
  std::uint64_t seed = 1;
  Range x{-20.0, 20.0};
  Range y{-20.0, 20.0};
  std::optional<std::variant<double, Range>> gains;  // default depends on strategy
  bool operator==(const InitSpec&) const = default;
};

struct StopSpec {
  std::optional<double> pseudo_gradient_tol;
  std::optional<double> consensus_tol;
  std::optional<double> nash_error_tol;
  bool operator==(const StopSpec&) const = default;
};

struct VerdictSpec {
  double tol = 1e-3;
  double gain_tol = 1e-3;
  bool operator==(const VerdictSpec&) const = default;
};

struct OutputSpec {
  std::string dir = "out";
  std::string prefix = "run";
  bool plots = true;
  bool operator==(const OutputSpec&) const = default;
};

struct SweepSpec {
  std::vector<std::uint64_t> seeds;
  std::vector<std::pair<std::string, std::vector<double>>> grid;  // single key supported per sweep
  int jobs = 1;
  bool operator==(const SweepSpec&) const = default;
};

struct RunConfig {
  GameSpec game;
  TopologySpec topology;
  StrategySpec strategy;
  IntegratorConfig integrator;
  std::optional<StopSpec> stop;
  InitSpec init;
  VerdictSpec verdict;
  OutputSpec output;
  std::optional<SweepSpec> sweep;

  bool operator==(const RunConfig& o) const
  {
    const auto& a = integrator;
    const auto& b = o.integrator;
    const bool same_integrator = a.method == b.method && a.step == b.step && a.abs_tol == b.abs_tol &&
                                 a.rel_tol == b.rel_tol && a.t_end == b.t_end && a.record_every == b.record_every &&
                                 a.min_step == b.min_step && a.keep_step_times == b.keep_step_times;
    return same_integrator && game == o.game && topology == o.topology && strategy == o.strategy && stop == o.stop &&
           init == o.init && verdict == o.verdict && output == o.output && sweep == o.sweep;
  }
};

namespace detail {

/// Line of the first occurrence of the key path in the raw text, 0 if unknown.
inline int locate_line(const std::string& text, const std::string& path)
{
  if (text.empty() || path.empty()) return 0;
  std::size_t pos = 0;
  std::size_t start = 1;
  bool found = false;
  while (start < path.size()) {
    std::size_t end = path.find('/', start);
    if (end == std::string::npos) end = path.size();
    const std::string token = path.substr(start, end - start);
    start = end + 1;
    if (!token.empty() && token.find_first_not_of("0123456789") == std::string::npos) continue;
    const std::size_t hit = text.find("\"" + token + "\"", pos);
    if (hit == std::string::npos) break;
    pos = hit;
    found = true;
  }
  if (!found) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class Reader {
public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const
  {
    throw ConfigError(path.empty() ? "/" : path, msg, locate_line(text_, path));
  }

  void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) const
  {
    if (!j.is_object()) fail(path, "expected an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items())
      if (!allowed.count(k)) fail(path + "/" + k, "unknown key");
  }

  double number(const json& j, const std::string& path) const
  {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
  }

  double positive(const json& j, const std::string& path) const
  {
    const double v = number(j, path);
    if (!(v > 0.0)) fail(path, "must be positive");
    return v;
  }

  int integer(const json& j, const std::string& path) const
  {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
  }

  std::string string(const json& j, const std::string& path) const
  {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
  }

  bool boolean(const json& j, const std::string& path) const
  {
    if (!j.is_boolean()) fail(path, "expected true or false");
    return j.get<bool>();
  }

  Range range(const json& j, const std::string& path) const
  {
    if (!j.is_array() || j.size() != 2) fail(path, "expected [lo, hi]");
    Range r{number(j[0], path + "/0"), number(j[1], path + "/1")};
    if (!(r.first < r.second)) fail(path, "range must satisfy lo < hi");
    return r;
  }

  std::vector<std::vector<double>> matrix(const json& j, const std::string& path) const
  {
    if (!j.is_array()) fail(path, "expected an array of rows");
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < j.size(); ++r) {
      const std::string rp = path + "/" + std::to_string(r);
      if (!j[r].is_array()) fail(rp, "expected a row array");
      std::vector<double> row;
      for (std::size_t c = 0; c < j[r].size(); ++c) row.push_back(number(j[r][c], rp + "/" + std::to_string(c)));
      if (!out.empty() && row.size() != out.front().size()) fail(rp, "ragged matrix");
      out.push_back(std::move(row));
    }
    return out;
  }

  MatrixParam matrix_param(const json& j, const std::string& path) const
  {
    if (j.is_number()) return {positive(j, path)};
    auto m = matrix(j, path);
    for (const auto& row : m)
      for (double v : row)
        if (!(v > 0.0)) fail(path, "entries must be positive");
    return {std::move(m)};
  }

  GraphSpec graph(const json& j, const std::string& path, int default_n) const
  {
    only_keys(j, path, {"preset", "n", "edges"});
    GraphSpec g;
    g.n = j.contains("n") ? integer(j["n"], path + "/n") : default_n;
    if (g.n < 1) fail(path + "/n", "vertex count must be positive (or implied by the game)");
    if (j.contains("preset")) {
      g.preset = string(j["preset"], path + "/preset");
      if (g.preset != "ring" && g.preset != "path" && g.preset != "complete")
        fail(path + "/preset", "unknown preset '" + g.preset + "' (ring, path, complete)");
      if (j.contains("edges")) fail(path + "/edges", "give either a preset or an edge list, not both");
    } else {
      if (!j.contains("edges")) fail(path, "graph needs a preset or an edge list");
      const json& e = j["edges"];
      if (!e.is_array()) fail(path + "/edges", "expected [[u, v], ...]");
      for (std::size_t k = 0; k < e.size(); ++k) {
        const std::string ep = path + "/edges/" + std::to_string(k);
        if (!e[k].is_array() || e[k].size() != 2) fail(ep, "expected [u, v]");
        const int u = integer(e[k][0], ep);
        const int v = integer(e[k][1], ep);
        if (u < 1 || v < 1 || u > g.n || v > g.n) fail(ep, "vertex id out of range 1.." + std::to_string(g.n));
        if (u == v) fail(ep, "self-loops are not allowed");
        g.edges.emplace_back(u, v);
      }
    }
    return g;
  }

private:
  const std::string& text_;
};

inline int game_players(const GameSpec& g)
{
  if (g.quadratic) return g.quadratic->n_players;
  if (g.registry == "connectivity5") return 5;
  if (g.registry == "decoupled2") return 2;
  return 0;
}

}  // namespace detail

/// Parses and validates a run configuration. `text` is the raw JSON source.
inline RunConfig parse_run_config(const std::string& text)
{
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    throw ConfigError("", std::string("malformed JSON: ") + e.what(), line);
  }

  detail::Reader rd(text);
  rd.only_keys(root, "", {"game", "graph", "graphs", "schedule", "min_dwell", "strategy", "strategy_params",
                          "integrator", "stop", "init", "verdict", "output", "sweep"});
  RunConfig cfg;

  // game
  if (!root.contains("game")) rd.fail("/game", "missing (registry name or {\"quadratic\": ...})");
  if (root["game"].is_string()) {
    cfg.game.registry = root["game"].get<std::string>();
    if (detail::game_players(cfg.game) == 0) rd.fail("/game", "unknown game '" + cfg.game.registry + "'");
  } else {
    rd.only_keys(root["game"], "/game", {"quadratic"});
    const json& q = root["game"]["quadratic"];
    rd.only_keys(q, "/game/quadratic", {"n_players", "action_dim", "Q", "b"});
    QuadraticSpec qs;
    if (!q.contains("n_players") || !q.contains("Q") || !q.contains("b"))
      rd.fail("/game/quadratic", "needs n_players, Q and b");
    qs.n_players = rd.integer(q["n_players"], "/game/quadratic/n_players");
    qs.action_dim = q.contains("action_dim") ? rd.integer(q["action_dim"], "/game/quadratic/action_dim") : 1;
    if (qs.n_players < 2 || qs.action_dim < 1) rd.fail("/game/quadratic", "needs n_players >= 2 and action_dim >= 1");
    qs.q = rd.matrix(q["Q"], "/game/quadratic/Q");
    const std::size_t dim = static_cast<std::size_t>(qs.n_players * qs.action_dim);
    if (qs.q.size() != dim || (dim > 0 && qs.q.front().size() != dim))
      rd.fail("/game/quadratic/Q", "must be (n_players*action_dim) square");
    if (!q["b"].is_array() || q["b"].size() != dim) rd.fail("/game/quadratic/b", "must have n_players*action_dim entries");
    for (std::size_t k = 0; k < dim; ++k) qs.b.push_back(rd.number(q["b"][k], "/game/quadratic/b/" + std::to_string(k)));
    cfg.game.quadratic = std::move(qs);
  }
  const int n = detail::game_players(cfg.game);

  // strategy
  if (!root.contains("strategy")) rd.fail("/strategy", "missing");
  try {
    cfg.strategy.kind = strategy_from_string(rd.string(root["strategy"], "/strategy"));
  } catch (const ConfigError&) {
    throw;
  } catch (const InputError& e) {
    rd.fail("/strategy", e.what());
  }
  const json params = root.value("strategy_params", json::object());
  rd.only_keys(params, "/strategy_params", {"theta", "theta_bar", "gamma", "cbar_rate_uses_c"});
  const StrategyKind kind = cfg.strategy.kind;
  if (params.contains("theta")) cfg.strategy.theta = rd.positive(params["theta"], "/strategy_params/theta");
  if (params.contains("theta_bar")) cfg.strategy.theta_bar = rd.matrix_param(params["theta_bar"], "/strategy_params/theta_bar");
  if (params.contains("gamma")) cfg.strategy.gamma = rd.matrix_param(params["gamma"], "/strategy_params/gamma");
  if (params.contains("cbar_rate_uses_c"))
    cfg.strategy.cbar_rate_uses_c = rd.boolean(params["cbar_rate_uses_c"], "/strategy_params/cbar_rate_uses_c");
  if (kind == StrategyKind::Fixed && !cfg.strategy.theta) rd.fail("/strategy_params/theta", "required for fixed");
  if (kind != StrategyKind::Fixed && (cfg.strategy.theta || cfg.strategy.theta_bar))
    rd.fail("/strategy_params/theta", "only valid for the fixed strategy");
  if (kind != StrategyKind::NodeAdaptive && cfg.strategy.gamma) rd.fail("/strategy_params/gamma", "only valid for node_adaptive");
  if (!is_edge_strategy(kind) && cfg.strategy.cbar_rate_uses_c)
    rd.fail("/strategy_params/cbar_rate_uses_c", "only valid for edge strategies");
  for (const auto* mp : {&cfg.strategy.theta_bar, &cfg.strategy.gamma})
    if (*mp) {
      if (const auto* rows = std::get_if<std::vector<std::vector<double>>>(&(*mp)->value))
        if (static_cast<int>(rows->size()) != n || (!rows->empty() && static_cast<int>(rows->front().size()) != n))
          rd.fail(mp == &cfg.strategy.gamma ? "/strategy_params/gamma" : "/strategy_params/theta_bar", "must be N x N");
    }

  // topology
  const bool switching = kind == StrategyKind::EdgeSwitching;
  if (switching) {
    if (root.contains("graph")) rd.fail("/graph", "edge_switching uses \"graphs\" + \"schedule\"");
    if (!root.contains("graphs") || !root["graphs"].is_object() || root["graphs"].empty())
      rd.fail("/graphs", "edge_switching needs named graphs");
    for (const auto& [name, gj] : root["graphs"].items()) {
      cfg.topology.graphs[name] = rd.graph(gj, "/graphs/" + name, n);
      if (cfg.topology.graphs[name].n != n) rd.fail("/graphs/" + name + "/n", "must equal the player count");
    }
    if (!root.contains("schedule") || !root["schedule"].is_array() || root["schedule"].empty())
      rd.fail("/schedule", "expected [{\"t\": 0.0, \"graph\": \"a\"}, ...]");
    for (std::size_t k = 0; k < root["schedule"].size(); ++k) {
      const std::string sp = "/schedule/" + std::to_string(k);
      const json& e = root["schedule"][k];
      rd.only_keys(e, sp, {"t", "graph"});
      if (!e.contains("t") || !e.contains("graph")) rd.fail(sp, "needs t and graph");
      ScheduleEntry se{rd.number(e["t"], sp + "/t"), rd.string(e["graph"], sp + "/graph")};
      if (!cfg.topology.graphs.count(se.graph)) rd.fail(sp + "/graph", "unknown graph '" + se.graph + "'");
      cfg.topology.schedule.push_back(std::move(se));
    }
    if (!root.contains("min_dwell")) rd.fail("/min_dwell", "required with a schedule");
    cfg.topology.min_dwell = rd.positive(root["min_dwell"], "/min_dwell");
    const auto& s = cfg.topology.schedule;
    if (s.front().t != 0.0) rd.fail("/schedule/0/t", "schedule must start at t = 0");
    for (std::size_t k = 1; k < s.size(); ++k) {
      if (!(s[k].t > s[k - 1].t)) rd.fail("/schedule/" + std::to_string(k) + "/t", "times must be strictly increasing");
      if (s[k].t - s[k - 1].t < cfg.topology.min_dwell)
        rd.fail("/schedule/" + std::to_string(k) + "/t", "dwell time below min_dwell");
    }
  } else {
    if (root.contains("graphs") || root.contains("schedule") || root.contains("min_dwell"))
      rd.fail("/schedule", "schedules are only valid with edge_switching");
    if (!root.contains("graph")) rd.fail("/graph", "missing");
    cfg.topology.graph = rd.graph(root["graph"], "/graph", n);
    if (cfg.topology.graph->n != n) rd.fail("/graph/n", "must equal the player count");
  }

  // integrator
  if (root.contains("integrator")) {
    const json& ij = root["integrator"];
    rd.only_keys(ij, "/integrator", {"method", "step", "abs_tol", "rel_tol", "t_end", "record_every", "min_step"});
    auto& ic = cfg.integrator;
    if (ij.contains("method")) {
      const std::string m = rd.string(ij["method"], "/integrator/method");
      if (m == "rk4") ic.method = Method::FixedRk4;
      else if (m == "rk45") ic.method = Method::AdaptiveRk45;
      else rd.fail("/integrator/method", "expected \"rk4\" or \"rk45\"");
    }
    if (ij.contains("step")) ic.step = rd.positive(ij["step"], "/integrator/step");
    if (ij.contains("abs_tol")) ic.abs_tol = rd.positive(ij["abs_tol"], "/integrator/abs_tol");
    if (ij.contains("rel_tol")) ic.rel_tol = rd.positive(ij["rel_tol"], "/integrator/rel_tol");
    if (ij.contains("t_end")) {
      ic.t_end = rd.number(ij["t_end"], "/integrator/t_end");
      if (ic.t_end < 0.0) rd.fail("/integrator/t_end", "must be non-negative");
    }
    if (ij.contains("record_every")) ic.record_every = rd.positive(ij["record_every"], "/integrator/record_every");
    if (ij.contains("min_step")) ic.min_step = rd.positive(ij["min_step"], "/integrator/min_step");
    if (ic.method == Method::FixedRk4 && ic.record_every < ic.step)
      rd.fail("/integrator/record_every", "must be >= step for rk4");
  }

  if (root.contains("stop")) {
    const json& sj = root["stop"];
    rd.only_keys(sj, "/stop", {"pseudo_gradient_tol", "consensus_tol", "nash_error_tol"});
    StopSpec st;
    if (sj.contains("pseudo_gradient_tol")) st.pseudo_gradient_tol = rd.positive(sj["pseudo_gradient_tol"], "/stop/pseudo_gradient_tol");
    if (sj.contains("consensus_tol")) st.consensus_tol = rd.positive(sj["consensus_tol"], "/stop/consensus_tol");
    if (sj.contains("nash_error_tol")) st.nash_error_tol = rd.positive(sj["nash_error_tol"], "/stop/nash_error_tol");
    cfg.stop = st;
  }

  if (root.contains("init")) {
    const json& ij = root["init"];
    rd.only_keys(ij, "/init", {"seed", "x", "y", "gains"});
    if (ij.contains("seed")) {
      if (!ij["seed"].is_number_unsigned()) rd.fail("/init/seed", "expected a non-negative integer");
      cfg.init.seed = ij["seed"].get<std::uint64_t>();
    }
    if (ij.contains("x")) cfg.init.x = rd.range(ij["x"], "/init/x");
    if (ij.contains("y")) cfg.init.y = rd.range(ij["y"], "/init/y");
    if (ij.contains("gains")) {
      if (ij["gains"].is_number()) cfg.init.gains = rd.number(ij["gains"], "/init/gains");
      else cfg.init.gains = rd.range(ij["gains"], "/init/gains");
      if (kind == StrategyKind::Fixed) rd.fail("/init/gains", "fixed gains come from theta * theta_bar");
    }
  }

  if (root.contains("verdict")) {
    const json& vj = root["verdict"];
    rd.only_keys(vj, "/verdict", {"tol", "gain_tol"});
    if (vj.contains("tol")) cfg.verdict.tol = rd.positive(vj["tol"], "/verdict/tol");
    if (vj.contains("gain_tol")) cfg.verdict.gain_tol = rd.positive(vj["gain_tol"], "/verdict/gain_tol");
  }

  if (root.contains("output")) {
    const json& oj = root["output"];
    rd.only_keys(oj, "/output", {"dir", "prefix", "plots"});
    if (oj.contains("dir")) cfg.output.dir = rd.string(oj["dir"], "/output/dir");
    if (oj.contains("prefix")) cfg.output.prefix = rd.string(oj["prefix"], "/output/prefix");
    if (oj.contains("plots")) cfg.output.plots = rd.boolean(oj["plots"], "/output/plots");
  }

  if (root.contains("sweep")) {
    const json& sj = root["sweep"];
    rd.only_keys(sj, "/sweep", {"seeds", "grid", "jobs"});
    SweepSpec sw;
    if (sj.contains("seeds")) {
      const json& s = sj["seeds"];
      if (s.is_array()) {
        for (std::size_t k = 0; k < s.size(); ++k) {
          if (!s[k].is_number_unsigned()) rd.fail("/sweep/seeds/" + std::to_string(k), "expected a non-negative integer");
          sw.seeds.push_back(s[k].get<std::uint64_t>());
        }
      } else {
        rd.only_keys(s, "/sweep/seeds", {"first", "count"});
        if (!s.contains("first") || !s.contains("count")) rd.fail("/sweep/seeds", "needs first and count");
        const int first = rd.integer(s["first"], "/sweep/seeds/first");
        const int count = rd.integer(s["count"], "/sweep/seeds/count");
        if (first < 0 || count < 0) rd.fail("/sweep/seeds", "first and count must be non-negative");
        for (int k = 0; k < count; ++k) sw.seeds.push_back(static_cast<std::uint64_t>(first + k));
      }
    }
    if (sj.contains("grid")) {
      rd.only_keys(sj["grid"], "/sweep/grid", {"gamma", "theta", "gain_init"});
      if (sj["grid"].size() > 1) rd.fail("/sweep/grid", "one grid parameter per sweep");
      for (const auto& [key, vals] : sj["grid"].items()) {
        const std::string gp = "/sweep/grid/" + key;
        if (!vals.is_array() || vals.empty()) rd.fail(gp, "expected a non-empty array of values");
        std::vector<double> v;
        for (std::size_t k = 0; k < vals.size(); ++k) v.push_back(rd.positive(vals[k], gp + "/" + std::to_string(k)));
        if (key == "gamma" && kind != StrategyKind::NodeAdaptive) rd.fail(gp, "gamma applies to node_adaptive");
        if (key == "theta" && kind != StrategyKind::Fixed) rd.fail(gp, "theta applies to fixed");
        if (key == "gain_init" && kind == StrategyKind::Fixed) rd.fail(gp, "gain_init does not apply to fixed");
        sw.grid.emplace_back(key, std::move(v));
      }
    }
    if (sj.contains("jobs")) {
      sw.jobs = rd.integer(sj["jobs"], "/sweep/jobs");
      if (sw.jobs < 1) rd.fail("/sweep/jobs", "must be >= 1");
    }
    cfg.sweep = std::move(sw);
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

namespace detail {

inline json to_json(const MatrixParam& m)
{
  if (const double* s = std::get_if<double>(&m.value)) return *s;
  return std::get<std::vector<std::vector<double>>>(m.value);
}

inline json to_json(const GraphSpec& g)
{
  json j;
  j["n"] = g.n;
  if (!g.preset.empty()) {
    j["preset"] = g.preset;
  } else {
    json edges = json::array();
    for (const auto& [u, v] : g.edges) edges.push_back({u, v});
    j["edges"] = edges;
  }
  return j;
}

}  // namespace detail

/// Canonical JSON form; parse_run_config(serialize(c).dump()) == c.
inline json serialize(const RunConfig& c)
{
  json j;
  if (c.game.quadratic) {
    const auto& q = *c.game.quadratic;
    j["game"] = {{"quadratic", {{"n_players", q.n_players}, {"action_dim", q.action_dim}, {"Q", q.q}, {"b", q.b}}}};
  } else {
    j["game"] = c.game.registry;
  }

  j["strategy"] = std::string(to_string(c.strategy.kind));
  json params = json::object();
  if (c.strategy.theta) params["theta"] = *c.strategy.theta;
  if (c.strategy.theta_bar) params["theta_bar"] = detail::to_json(*c.strategy.theta_bar);
  if (c.strategy.gamma) params["gamma"] = detail::to_json(*c.strategy.gamma);
  if (c.strategy.cbar_rate_uses_c) params["cbar_rate_uses_c"] = true;
  if (!params.empty()) j["strategy_params"] = params;

  if (c.topology.graph) {
    j["graph"] = detail::to_json(*c.topology.graph);
  } else {
    for (const auto& [name, g] : c.topology.graphs) j["graphs"][name] = detail::to_json(g);
    for (const auto& e : c.topology.schedule) j["schedule"].push_back({{"t", e.t}, {"graph", e.graph}});
    j["min_dwell"] = c.topology.min_dwell;
  }

  const auto& ic = c.integrator;
  j["integrator"] = {{"method", ic.method == Method::FixedRk4 ? "rk4" : "rk45"},
                     {"step", ic.step},
                     {"abs_tol", ic.abs_tol},
                     {"rel_tol", ic.rel_tol},
                     {"t_end", ic.t_end},
                     {"record_every", ic.record_every},
                     {"min_step", ic.min_step}};

  if (c.stop) {
    json s = json::object();
    if (c.stop->pseudo_gradient_tol) s["pseudo_gradient_tol"] = *c.stop->pseudo_gradient_tol;
    if (c.stop->consensus_tol) s["consensus_tol"] = *c.stop->consensus_tol;
    if (c.stop->nash_error_tol) s["nash_error_tol"] = *c.stop->nash_error_tol;
    j["stop"] = s;
  }

  j["init"] = {{"seed", c.init.seed}, {"x", {c.init.x.first, c.init.x.second}}, {"y", {c.init.y.first, c.init.y.second}}};
  if (c.init.gains) {
    if (const double* v = std::get_if<double>(&*c.init.gains)) j["init"]["gains"] = *v;
    else {
      const auto& r = std::get<Range>(*c.init.gains);
      j["init"]["gains"] = {r.first, r.second};
    }
  }
  j["verdict"] = {{"tol", c.verdict.tol}, {"gain_tol", c.verdict.gain_tol}};
  j["output"] = {{"dir", c.output.dir}, {"prefix", c.output.prefix}, {"plots", c.output.plots}};
  if (c.sweep) {
    json s;
    s["seeds"] = c.sweep->seeds;
    s["jobs"] = c.sweep->jobs;
    s["grid"] = json::object();
    for (const auto& [k, v] : c.sweep->grid) s["grid"][k] = v;
    j["sweep"] = s;
  }
  return j;
}

}  // namespace nashseek
