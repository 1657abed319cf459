#pragma once

// Scenario configs, builtin figure recipes, the sweep runner and its
// CSV + JSON reports.
//
// A config is one JSON document. Unknown keys are rejected so typos surface
// as errors instead of silently falling back to defaults.

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "csrs/agents.hpp"
#include "csrs/analytic.hpp"
#include "csrs/core.hpp"
#include "csrs/dynamics.hpp"
#include "csrs/partition.hpp"
#include "csrs/quality_market.hpp"
#include "csrs/welfare.hpp"

namespace csrs {

struct ConfigError : InvalidArgument {
  using InvalidArgument::InvalidArgument;
};

enum class Solver { Analytic, Iterate, Agents };

inline const char* to_string(Solver s) {
  switch (s) {
    case Solver::Analytic: return "analytic";
    case Solver::Iterate: return "iterate";
    case Solver::Agents: return "agents";
  }
  return "analytic";
}

struct SweepAxis {
  std::string param;
  std::vector<double> values;

  bool operator==(const SweepAxis&) const = default;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string description;
  MarketParams params;
  IterationConfig iteration;
  bool auto_damping = false;
  QuadratureSpec quad;
  Mode mode = Mode::Unaware;
  Solver solver = Solver::Analytic;
  std::size_t population = 1000;
  std::vector<SweepAxis> sweep;
  std::vector<std::uint64_t> seeds{1};
  std::string output;
  bool timing = true;
  unsigned threads = 0;  // 0: hardware concurrency
};

// Names accepted as sweep axes.
inline const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> names{"w",  "eta",          "s",           "p",
                                              "p0", "p1",           "value_offset", "cost_offset",
                                              "damping", "population"};
  return names;
}

inline void apply_parameter(ScenarioConfig& cfg, const std::string& name, double x) {
  auto& m = cfg.params;
  if (name == "w") m.w = x;
  else if (name == "eta") m.eta = x;
  else if (name == "s") m.s = x;
  else if (name == "p" || name == "p0") m.price_base = x;
  else if (name == "p1") m.price_slope = x;
  else if (name == "value_offset") m.value_offset = x;
  else if (name == "cost_offset") m.cost_offset = x;
  else if (name == "damping") cfg.iteration.damping = x;
  else if (name == "population") {
    if (!(x >= 1.0) || x != std::floor(x)) throw ConfigError("population must be a positive integer");
    cfg.population = static_cast<std::size_t>(x);
  } else
    throw ConfigError("unknown sweep parameter '" + name + "'");
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using nlohmann::json;

inline json curve_to_json(const Curve& c) {
  json j{{"kind", to_string(c.kind)}};
  if (c.kind == Curve::Kind::Power) j["exponent"] = c.a;
  if (c.kind == Curve::Kind::Affine) {
    j["intercept"] = c.a;
    j["slope"] = c.b;
  }
  return j;
}

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  // Rejects keys outside `allowed`.
  void only(std::initializer_list<const char*> allowed) const {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!ok.count(it.key())) throw ConfigError(at(it.key()) + ": unknown key");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& raw(const char* key) const { return j_.at(key); }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void number(const char* key, double& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(at(key) + ": expected a number");
    out = v.get<double>();
  }

  template <class Int>
  void integer(const char* key, Int& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned())
      throw ConfigError(at(key) + ": expected a nonnegative integer");
    out = static_cast<Int>(v.get<std::uint64_t>());
  }

  void boolean(const char* key, bool& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(at(key) + ": expected true or false");
    out = v.get<bool>();
  }

  void string(const char* key, std::string& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(at(key) + ": expected a string");
    out = v.get<std::string>();
  }

  std::vector<double> numbers(const char* key) const {
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(at(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number())
        throw ConfigError(at(key) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError((path_.empty() ? std::string("config") : path_) + ": " + what);
  }

 private:
  const json& j_;
  std::string path_;
};

inline Curve curve_from_json(const json& j, const std::string& path) {
  Reader r(j, path);
  r.only({"kind", "exponent", "intercept", "slope"});
  std::string kind = "constant";
  r.string("kind", kind);
  Curve c;
  if (kind == "constant") {
    c = Curve::constant();
  } else if (kind == "log1p") {
    c = Curve::log1p();
  } else if (kind == "power") {
    double e = 1.0;
    r.number("exponent", e);
    c = Curve::power(e);
  } else if (kind == "affine") {
    double a = 0.0, b = 1.0;
    r.number("intercept", a);
    r.number("slope", b);
    c = Curve::affine(a, b);
  } else {
    throw ConfigError(r.at("kind") + ": unknown curve kind '" + kind + "'");
  }
  return c;
}

template <class E>
E parse_enum(const Reader& r, const char* key, std::initializer_list<std::pair<const char*, E>> opts,
             E fallback) {
  std::string s;
  r.string(key, s);
  if (s.empty()) return fallback;
  for (auto& [name, value] : opts)
    if (s == name) return value;
  throw ConfigError(r.at(key) + ": unknown value '" + s + "'");
}

// 1-based line and column of a byte offset.
inline std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

inline nlohmann::json to_json(const ScenarioConfig& c) {
  using nlohmann::json;
  const auto& m = c.params;
  json market{{"w", m.w},
              {"eta", m.eta},
              {"p0", m.price_base},
              {"p1", m.price_slope},
              {"s", m.s},
              {"quality_grid", m.quality_grid},
              {"value_offset", m.value_offset},
              {"cost_offset", m.cost_offset},
              {"value_curve", detail::curve_to_json(m.value_curve)},
              {"cost_curve", detail::curve_to_json(m.cost_curve)}};
  const auto& it = c.iteration;
  json iteration{{"damping", it.damping},
                 {"tolerance", it.tolerance},
                 {"max_iters", it.max_iters},
                 {"auto_damping", c.auto_damping},
                 {"initial_phi", it.initial_phi ? json(it.initial_phi->values) : json(nullptr)},
                 {"phi_cap", it.phi_cap ? json(*it.phi_cap) : json(nullptr)}};
  if (it.initial_shares) {
    const auto& s = *it.initial_shares;
    iteration["initial_shares"] = {
        {"sensor", s.sensor}, {"requester", s.requester}, {"alien", s.alien}};
  }
  json sweep = json::array();
  for (const auto& a : c.sweep) sweep.push_back({{"param", a.param}, {"values", a.values}});
  return json{{"name", c.name},
              {"description", c.description},
              {"mode", to_string(c.mode)},
              {"solver", to_string(c.solver)},
              {"market", market},
              {"iteration", iteration},
              {"quadrature", {{"rule", to_string(c.quad.rule)}, {"resolution", c.quad.resolution}}},
              {"agents", {{"population", c.population}}},
              {"sweep", sweep},
              {"seeds", c.seeds},
              {"output", c.output},
              {"timing", c.timing},
              {"threads", c.threads}};
}

inline void validate(const ScenarioConfig& c);

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  using detail::Reader;
  ScenarioConfig c;
  Reader root(j, "");
  root.only({"name", "description", "mode", "solver", "market", "iteration", "quadrature",
             "agents", "sweep", "seeds", "output", "timing", "threads"});
  root.string("name", c.name);
  root.string("description", c.description);
  c.mode = detail::parse_enum<Mode>(
      root, "mode", {{"unaware", Mode::Unaware}, {"matching", Mode::Matching}, {"cross", Mode::Cross}},
      Mode::Unaware);
  c.solver = detail::parse_enum<Solver>(
      root, "solver",
      {{"analytic", Solver::Analytic}, {"iterate", Solver::Iterate}, {"agents", Solver::Agents}},
      Solver::Analytic);

  if (root.has("market")) {
    Reader r(root.raw("market"), "market");
    r.only({"w", "eta", "p0", "p1", "s", "quality_grid", "value_offset", "cost_offset",
            "value_curve", "cost_curve"});
    auto& m = c.params;
    r.number("w", m.w);
    r.number("eta", m.eta);
    r.number("p0", m.price_base);
    r.number("p1", m.price_slope);
    r.number("s", m.s);
    if (r.has("quality_grid")) m.quality_grid = r.numbers("quality_grid");
    r.number("value_offset", m.value_offset);
    r.number("cost_offset", m.cost_offset);
    if (r.has("value_curve")) m.value_curve = detail::curve_from_json(r.raw("value_curve"), "market.value_curve");
    if (r.has("cost_curve")) m.cost_curve = detail::curve_from_json(r.raw("cost_curve"), "market.cost_curve");
  }
  if (root.has("iteration")) {
    Reader r(root.raw("iteration"), "iteration");
    r.only({"damping", "tolerance", "max_iters", "auto_damping", "initial_phi", "initial_shares",
            "phi_cap"});
    auto& it = c.iteration;
    r.number("damping", it.damping);
    r.number("tolerance", it.tolerance);
    r.integer("max_iters", it.max_iters);
    r.boolean("auto_damping", c.auto_damping);
    if (r.has("initial_phi")) it.initial_phi = BenefitVector(r.numbers("initial_phi"));
    if (r.has("phi_cap")) {
      double cap = 0.0;
      r.number("phi_cap", cap);
      it.phi_cap = cap;
    }
    if (r.has("initial_shares")) {
      Reader s(r.raw("initial_shares"), "iteration.initial_shares");
      s.only({"sensor", "requester", "alien"});
      MarketShares sh;
      if (s.has("sensor")) sh.sensor = s.numbers("sensor");
      if (s.has("requester")) sh.requester = s.numbers("requester");
      s.number("alien", sh.alien);
      it.initial_shares = sh;
    }
  }
  if (root.has("quadrature")) {
    Reader r(root.raw("quadrature"), "quadrature");
    r.only({"rule", "resolution"});
    c.quad.rule = detail::parse_enum<QuadratureSpec::Rule>(
        r, "rule", {{"exact", QuadratureSpec::Rule::Exact}, {"midpoint", QuadratureSpec::Rule::Midpoint}},
        QuadratureSpec::Rule::Exact);
    r.integer("resolution", c.quad.resolution);
  }
  if (root.has("agents")) {
    Reader r(root.raw("agents"), "agents");
    r.only({"population"});
    r.integer("population", c.population);
  }
  if (root.has("sweep")) {
    const auto& s = root.raw("sweep");
    if (!s.is_array()) throw ConfigError("sweep: expected an array");
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::string path = "sweep[" + std::to_string(i) + "]";
      Reader r(s[i], path);
      r.only({"param", "values"});
      SweepAxis axis;
      r.string("param", axis.param);
      if (!r.has("values")) throw ConfigError(path + ".values: missing");
      axis.values = r.numbers("values");
      c.sweep.push_back(std::move(axis));
    }
  }
  if (root.has("seeds")) {
    const auto& s = root.raw("seeds");
    if (!s.is_array()) throw ConfigError("seeds: expected an array of integers");
    c.seeds.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_number_unsigned())
        throw ConfigError("seeds[" + std::to_string(i) + "]: expected a nonnegative integer");
      c.seeds.push_back(s[i].get<std::uint64_t>());
    }
  }
  root.string("output", c.output);
  root.boolean("timing", c.timing);
  root.integer("threads", c.threads);
  validate(c);
  return c;
}

// Parses a config document. Syntax errors report "line L, column C".
inline ScenarioConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t off = e.byte > 0 ? e.byte - 1 : 0;
    auto [line, col] = detail::line_col(text, off);
    throw ConfigError("config: syntax error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + e.what());
  }
  return config_from_json(j);
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string dump_config(const ScenarioConfig& c) { return to_json(c).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Validation and sweep expansion

// Every point of the sweep grid, first axis outermost.
inline std::vector<std::vector<double>> sweep_points(const ScenarioConfig& c) {
  std::vector<std::vector<double>> pts{{}};
  for (const auto& axis : c.sweep) {
    std::vector<std::vector<double>> next;
    for (const auto& p : pts)
      for (double x : axis.values) {
        auto q = p;
        q.push_back(x);
        next.push_back(std::move(q));
      }
    pts = std::move(next);
  }
  return pts;
}

inline ScenarioConfig at_point(const ScenarioConfig& c, const std::vector<double>& point) {
  ScenarioConfig out = c;
  for (std::size_t i = 0; i < c.sweep.size(); ++i) apply_parameter(out, c.sweep[i].param, point[i]);
  return out;
}

namespace detail {

inline void validate_point(const ScenarioConfig& c, const std::string& where) {
  try {
    validate(c.params);
    validate(c.quad);
    if (c.solver != Solver::Agents) validate(c.iteration);
    if (c.mode == Mode::Unaware && c.params.grades() != 1)
      throw ConfigError("unaware mode needs a single quality grade");
    if (c.mode != Mode::Unaware && c.params.eta != 1.0)
      throw ConfigError("matching and cross modes need eta = 1");
    if (c.solver == Solver::Analytic && c.mode != Mode::Unaware)
      throw ConfigError("the analytic solver only covers unaware mode");
    if (c.solver == Solver::Analytic && !is_unaware_normalized(c.params))
      throw ConfigError("the analytic solver needs f = g = 1 and zero offsets");
    if (c.iteration.initial_phi) validate(*c.iteration.initial_phi, c.params.grades());
    if (c.iteration.initial_shares) {
      const auto& s = *c.iteration.initial_shares;
      if (s.sensor.size() != c.params.grades() || s.requester.size() != c.params.grades())
        throw ConfigError("initial shares must have one entry per grade");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + e.what());
  }
}

}  // namespace detail

inline void validate(const ScenarioConfig& c) {
  std::set<std::string> seen;
  for (const auto& axis : c.sweep) {
    const auto& names = sweep_parameters();
    if (std::find(names.begin(), names.end(), axis.param) == names.end())
      throw ConfigError("sweep: unknown parameter '" + axis.param + "'");
    if (axis.values.empty()) throw ConfigError("sweep: axis '" + axis.param + "' has no values");
    if (!seen.insert(axis.param).second)
      throw ConfigError("sweep: parameter '" + axis.param + "' appears twice");
  }
  if (c.seeds.empty()) throw ConfigError("seeds: list is empty");
  if (c.population == 0) throw ConfigError("agents.population must be >= 1");
  detail::validate_point(c, "market: ");
  for (const auto& p : sweep_points(c)) detail::validate_point(at_point(c, p), "sweep point: ");
}

// ---------------------------------------------------------------------------
// Recipes

namespace detail {

inline std::vector<double> steps(double lo, double hi, double step) {
  std::vector<double> out;
  int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) out.push_back(std::round((lo + i * step) * 1e12) / 1e12);
  return out;
}

inline ScenarioConfig unaware_recipe(std::string name, std::string description, double eta, double p) {
  ScenarioConfig c;
  c.name = std::move(name);
  c.description = std::move(description);
  c.params = unaware_market(eta, p, 0.2);
  c.mode = Mode::Unaware;
  c.solver = Solver::Analytic;
  c.iteration.initial_phi = BenefitVector::scalar(0.0);
  return c;
}

inline ScenarioConfig quality_recipe(std::string name, std::string description, Mode mode) {
  ScenarioConfig c;
  c.name = std::move(name);
  c.description = std::move(description);
  c.params = quality_market(0.2, 0.35);
  c.mode = mode;
  c.solver = Solver::Iterate;
  // lambda = 1/2 cycles at small s under matching; search for a damping that
  // converges.
  c.auto_damping = true;
  return c;
}

}  // namespace detail

inline std::vector<ScenarioConfig> builtin_recipes() {
  using detail::steps;
  std::vector<ScenarioConfig> out;
  auto s_short = steps(0.1, 0.5, 0.1);
  auto s_long = steps(0.0, 1.0, 0.05);

  auto fig3 = detail::unaware_recipe("fig3", "welfare vs s for eta in 0.5..1, p = 0", 0.5, 0.0);
  fig3.sweep = {{"eta", steps(0.5, 1.0, 0.1)}, {"s", s_short}};
  out.push_back(fig3);

  auto fig4 = detail::unaware_recipe("fig4", "welfare vs s for p in 0..0.5, eta = 1", 1.0, 0.0);
  fig4.sweep = {{"p", steps(0.0, 0.5, 0.1)}, {"s", s_short}};
  out.push_back(fig4);

  auto fig5 = fig3;
  fig5.name = "fig5";
  fig5.description = "efficiency ratio vs s for eta in 0.5..1, p = 0";
  out.push_back(fig5);

  const std::pair<const char*, double> share_figs[] = {{"fig6", 0.4}, {"fig7", 0.8}, {"fig8", 1.0}};
  for (auto [name, eta] : share_figs) {
    char desc[96];
    std::snprintf(desc, sizeof desc, "market shares vs s in [0, 1], eta = %g, p = 0", eta);
    auto c = detail::unaware_recipe(name, desc, eta, 0.0);
    c.sweep = {{"s", s_long}};
    out.push_back(c);
  }

  auto fig9 = detail::quality_recipe(
      "fig9", "quality-aware welfare vs s for prices 0.1 + {0.2, 0.5, 0.8} q", Mode::Matching);
  fig9.sweep = {{"p1", {0.2, 0.5, 0.8}}, {"s", s_short}};
  out.push_back(fig9);

  out.push_back(detail::quality_recipe("fig10", "matching-quality partition, s = 0.2, p = 0.1 + 0.35 q",
                                       Mode::Matching));
  auto fig11 = detail::quality_recipe("fig11", "matching-quality market shares vs s", Mode::Matching);
  fig11.sweep = {{"s", steps(0.05, 0.6, 0.05)}};
  out.push_back(fig11);

  out.push_back(detail::quality_recipe("fig12", "cross-quality partition, s = 0.2, p = 0.1 + 0.35 q",
                                       Mode::Cross));
  auto fig13 = detail::quality_recipe("fig13", "cross-quality market shares vs s", Mode::Cross);
  fig13.sweep = {{"s", steps(0.05, 0.6, 0.05)}};
  out.push_back(fig13);
  return out;
}

inline std::optional<ScenarioConfig> find_recipe(const std::string& name) {
  for (auto& r : builtin_recipes())
    if (r.name == name) return r;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Running

struct ReportRow {
  std::vector<double> params;
  std::optional<std::uint64_t> seed;
  BenefitVector phi;
  MarketShares shares;
  WelfareReport welfare;
  bool converged = false;
  std::size_t iters = 0;
  double ms = 0.0;
};

struct Report {
  std::vector<std::string> header;
  std::vector<ReportRow> rows;

  bool all_converged() const {
    for (const auto& r : rows)
      if (!r.converged) return false;
    return true;
  }
};

namespace detail {

inline std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline double resolve_damping(const ScenarioConfig& c) {
  if (!c.auto_damping) return c.iteration.damping;
  if (c.mode == Mode::Unaware && closed_form_applicable(c.params))
    return std::max(damping_threshold(c.params), 0.5);
  auto cfg = c.iteration;
  auto lam = empirical_damping_threshold(c.params, cfg, c.mode);
  return lam.value_or(c.iteration.damping);
}

inline ReportRow run_point(const ScenarioConfig& c, const std::vector<double>& point,
                           std::optional<std::uint64_t> seed) {
  auto t0 = std::chrono::steady_clock::now();
  ReportRow row;
  row.params = point;
  row.seed = seed;
  const std::size_t K = c.params.grades();
  try {
    switch (c.solver) {
      case Solver::Analytic: {
        auto eq = solve_unaware_equilibrium(c.params);
        row.phi = BenefitVector::scalar(eq.phi_star);
        row.shares = eq.shares;
        row.converged = true;
        break;
      }
      case Solver::Iterate: {
        IterationConfig cfg = c.iteration;
        cfg.quad = c.quad;
        cfg.damping = resolve_damping(c);
        if (c.mode == Mode::Unaware && !cfg.initial_phi) cfg.initial_phi = BenefitVector::scalar(0.0);
        auto trace = c.mode == Mode::Unaware ? iterate_unaware(c.params, cfg)
                                             : iterate_quality(c.params, cfg, c.mode);
        row.phi = trace.final_phi();
        row.shares = trace.final_shares();
        row.converged = trace.converged;
        row.iters = trace.iterations();
        break;
      }
      case Solver::Agents: {
        auto pop = sample_population(c.population, seed.value_or(0));
        auto res = run_finite_simulation(pop, c.params, c.iteration, c.mode);
        row.phi = res.phi;
        row.shares = res.shares;
        row.converged = res.converged;
        row.iters = res.rounds;
        break;
      }
    }
    // Welfare of the continuum partition at the reported Phi.
    row.welfare = welfare_report(row.phi, c.params, c.quad, c.mode);
  } catch (const NonConvergence&) {
    row.converged = false;
  } catch (const BracketError&) {
    row.converged = false;
  }
  if (row.phi.size() != K) {
    const double nan = std::nan("");
    row.phi = BenefitVector(std::vector<double>(K, nan));
    row.shares = {std::vector<double>(K, nan), std::vector<double>(K, nan), nan};
    row.welfare = {nan, nan, nan};
  }
  if (c.timing)
    row.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

}  // namespace detail

inline std::vector<std::string> report_header(const ScenarioConfig& c) {
  std::vector<std::string> h;
  for (const auto& a : c.sweep) h.push_back(a.param);
  if (c.solver == Solver::Agents) h.push_back("seed");
  const std::size_t K = c.params.grades();
  for (std::size_t k = 1; k <= K; ++k) h.push_back("phi_" + std::to_string(k));
  for (std::size_t k = 1; k <= K; ++k) h.push_back("share_sensor_" + std::to_string(k));
  for (std::size_t k = 1; k <= K; ++k) h.push_back("share_requester_" + std::to_string(k));
  for (const char* s : {"share_alien", "welfare", "max_welfare", "ratio", "converged", "iters", "ms"})
    h.push_back(s);
  return h;
}

// Runs every sweep point (and every seed for the agent solver) on a worker
// pool. Rows come back in sweep order, seeds innermost. With `sweep` false
// only the base point is run.
inline Report run_scenario(const ScenarioConfig& config, bool sweep = true) {
  ScenarioConfig c = config;
  if (!sweep) c.sweep.clear();
  validate(c);
  struct Job {
    std::vector<double> point;
    std::optional<std::uint64_t> seed;
  };
  std::vector<Job> jobs;
  for (const auto& p : sweep_points(c)) {
    if (c.solver == Solver::Agents)
      for (auto s : c.seeds) jobs.push_back({p, s});
    else
      jobs.push_back({p, std::nullopt});
  }

  Report report;
  report.header = report_header(c);
  report.rows.resize(jobs.size());
  unsigned threads = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs.size());
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      try {
        report.rows[i] = detail::run_point(at_point(c, jobs[i].point), jobs[i].point, jobs[i].seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return report;
}

inline std::string to_csv(const Report& r) {
  std::string out;
  for (std::size_t i = 0; i < r.header.size(); ++i) out += (i ? "," : "") + r.header[i];
  out += "\n";
  for (const auto& row : r.rows) {
    std::vector<std::string> cells;
    for (double x : row.params) cells.push_back(detail::fmt(x));
    if (row.seed) cells.push_back(std::to_string(*row.seed));
    for (double x : row.phi.values) cells.push_back(detail::fmt(x));
    for (double x : row.shares.sensor) cells.push_back(detail::fmt(x));
    for (double x : row.shares.requester) cells.push_back(detail::fmt(x));
    cells.push_back(detail::fmt(row.shares.alien));
    cells.push_back(detail::fmt(row.welfare.equilibrium_welfare));
    cells.push_back(detail::fmt(row.welfare.max_welfare));
    cells.push_back(detail::fmt(row.welfare.efficiency_ratio));
    cells.push_back(row.converged ? "1" : "0");
    cells.push_back(std::to_string(row.iters));
    cells.push_back(detail::fmt(row.ms));
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += "\n";
  }
  return out;
}

// Hex SHA-1 of "blob <size>\0<content>", i.e. what `git hash-object` prints.
inline std::string git_blob_sha1(const std::string& content) {
  std::string data = "blob " + std::to_string(content.size());
  data.push_back('\0');
  data += content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

inline std::string sidecar_json(const ScenarioConfig& c, const Report& r, const std::string& csv) {
  std::size_t failed = 0;
  for (const auto& row : r.rows) failed += row.converged ? 0 : 1;
  nlohmann::json j{{"config", to_json(c)},
                   {"csv_sha1", git_blob_sha1(csv)},
                   {"rows", r.rows.size()},
                   {"nonconverged", failed}};
  return j.dump(2) + "\n";
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

// Writes <path> (CSV) and <path>.json (config + hash).
inline void write_report(const ScenarioConfig& c, const Report& r, const std::string& path) {
  std::string csv = to_csv(r);
  write_text(path, csv);
  write_text(path + ".json", sidecar_json(c, r, csv));
}

// ---------------------------------------------------------------------------
// Traces

inline IterationTrace trace_scenario(const ScenarioConfig& config) {
  ScenarioConfig c = config;
  c.sweep.clear();
  validate(c);
  IterationConfig cfg = c.iteration;
  cfg.quad = c.quad;
  cfg.damping = detail::resolve_damping(c);
  if (c.mode == Mode::Unaware) {
    if (!cfg.initial_phi) cfg.initial_phi = BenefitVector::scalar(0.0);
    return iterate_unaware(c.params, cfg);
  }
  return iterate_quality(c.params, cfg, c.mode);
}

inline std::string trace_csv(const IterationTrace& tr) {
  std::string out = "t";
  const std::size_t K = tr.steps.front().phi.size();
  for (std::size_t k = 1; k <= K; ++k) out += ",phi_" + std::to_string(k);
  for (std::size_t k = 1; k <= K; ++k) out += ",share_sensor_" + std::to_string(k);
  for (std::size_t k = 1; k <= K; ++k) out += ",share_requester_" + std::to_string(k);
  out += ",share_alien,residual\n";
  for (const auto& s : tr.steps) {
    out += std::to_string(s.t);
    for (double x : s.phi.values) out += "," + detail::fmt(x);
    for (double x : s.shares.sensor) out += "," + detail::fmt(x);
    for (double x : s.shares.requester) out += "," + detail::fmt(x);
    out += "," + detail::fmt(s.shares.alien) + "," + detail::fmt(s.residual) + "\n";
  }
  return out;
}

}  // namespace csrs
