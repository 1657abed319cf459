// Command-line front end: solve one scenario, run a sweep, list the builtin
// recipes or dump an iteration trace.
//
// Exit status: 0 on success, 2 when any row failed to converge, 1 on usage,
// config or I/O errors.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "csrs/experiments.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string recipe;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string solver;
  std::string mode;
  std::optional<std::size_t> resolution;
  std::string rule;
};

void add_scenario_options(CLI::App* cmd, Overrides& o) {
  auto* src = cmd->add_option_group("source", "where the scenario comes from");
  src->add_option("--config", o.config, "scenario JSON file")->check(CLI::ExistingFile);
  src->add_option("--recipe", o.recipe, "builtin recipe name (see `recipes`)");
  src->require_option(1);
  cmd->add_option("--out", o.out, "output CSV path (a .json sidecar is written next to it)");
  cmd->add_option("--seed", o.seed, "run a single seed instead of the configured list");
  cmd->add_option("--solver", o.solver, "analytic | iterate | agents")
      ->check(CLI::IsMember({"analytic", "iterate", "agents"}));
  cmd->add_option("--mode", o.mode, "unaware | matching | cross")
      ->check(CLI::IsMember({"unaware", "matching", "cross"}));
  cmd->add_option("--resolution", o.resolution, "cells per axis for the midpoint rule")
      ->check(CLI::Range(2, 100000));
  cmd->add_option("--rule", o.rule, "exact | midpoint")->check(CLI::IsMember({"exact", "midpoint"}));
}

csrs::ScenarioConfig resolve(const Overrides& o) {
  csrs::ScenarioConfig c;
  if (!o.config.empty()) {
    c = csrs::load_config(o.config);
  } else {
    auto r = csrs::find_recipe(o.recipe);
    if (!r) throw csrs::ConfigError("unknown recipe '" + o.recipe + "'");
    c = *r;
  }
  if (o.seed) c.seeds = {*o.seed};
  if (!o.solver.empty())
    c.solver = o.solver == "analytic" ? csrs::Solver::Analytic
               : o.solver == "iterate" ? csrs::Solver::Iterate
                                       : csrs::Solver::Agents;
  if (!o.mode.empty())
    c.mode = o.mode == "unaware" ? csrs::Mode::Unaware
             : o.mode == "matching" ? csrs::Mode::Matching
                                    : csrs::Mode::Cross;
  if (o.resolution) c.quad.resolution = *o.resolution;
  if (!o.rule.empty())
    c.quad.rule = o.rule == "exact" ? csrs::QuadratureSpec::Rule::Exact
                                    : csrs::QuadratureSpec::Rule::Midpoint;
  if (!o.out.empty()) c.output = o.out;
  csrs::validate(c);
  return c;
}

int emit_report(const csrs::ScenarioConfig& c, bool sweep) {
  auto report = csrs::run_scenario(c, sweep);
  if (c.output.empty())
    std::cout << csrs::to_csv(report);
  else
    csrs::write_report(c, report, c.output);
  return report.all_converged() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium solver and simulator for crowdsensing data markets"};
  app.require_subcommand(1);

  Overrides solve_o, sweep_o, trace_o;
  auto* solve = app.add_subcommand("solve", "run the base point of one scenario");
  add_scenario_options(solve, solve_o);
  auto* sweep = app.add_subcommand("sweep", "run every point of the scenario's sweep grid");
  add_scenario_options(sweep, sweep_o);
  auto* trace = app.add_subcommand("trace", "dump the per-iteration Phi trajectory");
  add_scenario_options(trace, trace_o);

  std::string show;
  auto* recipes = app.add_subcommand("recipes", "list builtin recipes");
  recipes->add_option("--show", show, "print one recipe as a config document");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (recipes->parsed()) {
      if (!show.empty()) {
        auto r = csrs::find_recipe(show);
        if (!r) throw csrs::ConfigError("unknown recipe '" + show + "'");
        std::cout << csrs::dump_config(*r);
        return 0;
      }
      for (const auto& r : csrs::builtin_recipes()) {
        std::size_t points = csrs::sweep_points(r).size();
        std::printf("%-6s %-8s %-9s %3zu point%s  %s\n", r.name.c_str(), csrs::to_string(r.mode),
                    csrs::to_string(r.solver), points, points == 1 ? " " : "s",
                    r.description.c_str());
      }
      return 0;
    }
    if (solve->parsed()) return emit_report(resolve(solve_o), false);
    if (sweep->parsed()) return emit_report(resolve(sweep_o), true);
    if (trace->parsed()) {
      auto c = resolve(trace_o);
      auto tr = csrs::trace_scenario(c);
      std::string csv = csrs::trace_csv(tr);
      if (c.output.empty())
        std::cout << csv;
      else
        csrs::write_text(c.output, csv);
      return tr.converged ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
