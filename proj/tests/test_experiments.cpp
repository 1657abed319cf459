#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csrs/experiments.hpp"

using namespace csrs;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

ScenarioConfig recipe(const char* name) {
  auto r = find_recipe(name);
  if (!r) throw std::runtime_error(name);
  return *r;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  return out;
}

}  // namespace

TEST(Recipes, AllPresentAndValid) {
  auto all = builtin_recipes();
  std::vector<std::string> names;
  for (const auto& r : all) {
    names.push_back(r.name);
    EXPECT_NO_THROW(validate(r)) << r.name;
    EXPECT_FALSE(r.description.empty());
  }
  EXPECT_EQ(names, (std::vector<std::string>{"fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9",
                                             "fig10", "fig11", "fig12", "fig13"}));
  EXPECT_FALSE(find_recipe("fig2").has_value());
}

TEST(Recipes, Fig8IsFullRevenueShare) {
  auto r = recipe("fig8");
  EXPECT_EQ(r.params.eta, 1.0);
  EXPECT_EQ(r.params.price_base, 0.0);
  ASSERT_EQ(r.sweep.size(), 1u);
  EXPECT_EQ(r.sweep[0].param, "s");
  EXPECT_EQ(r.sweep[0].values.size(), 21u);
  EXPECT_EQ(r.sweep[0].values.front(), 0.0);
  EXPECT_EQ(r.sweep[0].values.back(), 1.0);
  EXPECT_EQ(r.sweep[0].values[7], 0.35);
}

TEST(Recipes, Fig9PriceGrid) {
  auto r = recipe("fig9");
  EXPECT_EQ(r.params.price_base, 0.1);
  EXPECT_EQ(r.params.eta, 1.0);
  EXPECT_EQ(r.params.quality_grid, (std::vector<double>{1.0, 2.0}));
  ASSERT_EQ(r.sweep.size(), 2u);
  EXPECT_EQ(r.sweep[0].param, "p1");
  EXPECT_EQ(r.sweep[0].values, (std::vector<double>{0.2, 0.5, 0.8}));
  EXPECT_EQ(r.sweep[1].param, "s");
  EXPECT_EQ(r.sweep[1].values, (std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5}));
}

TEST(Config, RoundTripGivesIdenticalReports) {
  auto c = recipe("fig7");
  c.timing = false;
  c.iteration.phi_cap = 2.5;
  auto text = dump_config(c);
  auto back = parse_config(text);
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(dump_config(back), text);
  EXPECT_EQ(to_csv(run_scenario(c)), to_csv(run_scenario(back)));

  auto q = recipe("fig13");
  q.timing = false;
  q.sweep[0].values = {0.2, 0.4};
  auto shares = MarketShares::empty(2);
  shares.alien = 1.0;
  q.iteration.initial_shares = shares;
  auto qback = parse_config(dump_config(q));
  EXPECT_EQ(to_json(qback), to_json(q));
  EXPECT_EQ(to_csv(run_scenario(q)), to_csv(run_scenario(qback)));
}

TEST(Config, DefaultsFromAnEmptyDocument) {
  auto c = parse_config("{}");
  EXPECT_EQ(c.mode, Mode::Unaware);
  EXPECT_EQ(c.solver, Solver::Analytic);
  EXPECT_TRUE(c.sweep.empty());
  EXPECT_EQ(c.quad.rule, QuadratureSpec::Rule::Exact);
}

TEST(Config, SyntaxErrorsCarryLineAndColumn) {
  auto msg = config_error("{\n  \"name\": \"x\",\n  \"mode\": unaware\n}");
  EXPECT_NE(msg.find("line 3, column"), std::string::npos) << msg;
}

TEST(Config, FieldErrorsCarryThePath) {
  EXPECT_NE(config_error(R"({"market": {"eta": "half"}})").find("market.eta: expected a number"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"market": {"etta": 0.5}})").find("market.etta: unknown key"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"colour": 1})").find("colour: unknown key"), std::string::npos);
  EXPECT_NE(config_error(R"({"sweep": [{"param": "zeta", "values": [1]}]})").find("unknown parameter"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"sweep": [{"param": "s", "values": []}]})").find("no values"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"iteration": {"max_iters": -3}})").find("iteration.max_iters"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"mode": "sideways"})").find("mode"), std::string::npos);
  EXPECT_NE(config_error(R"({"market": {"eta": 1.5}})").find("eta"), std::string::npos);
  EXPECT_NE(config_error(R"({"mode": "matching", "market": {"eta": 0.5}})").find("eta = 1"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"sweep": [{"param": "eta", "values": [0.5, 2.0]}]})").find("sweep point"),
            std::string::npos);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Sweep, PointsAndParameters) {
  auto c = recipe("fig3");
  auto pts = sweep_points(c);
  ASSERT_EQ(pts.size(), 30u);
  EXPECT_EQ(pts[0], (std::vector<double>{0.5, 0.1}));
  EXPECT_EQ(pts[1], (std::vector<double>{0.5, 0.2}));
  EXPECT_EQ(pts[5], (std::vector<double>{0.6, 0.1}));
  auto at = at_point(c, pts[7]);
  EXPECT_EQ(at.params.eta, 0.6);
  EXPECT_EQ(at.params.s, 0.3);
  ScenarioConfig d;
  apply_parameter(d, "p", 0.3);
  EXPECT_EQ(d.params.price_base, 0.3);
  apply_parameter(d, "damping", 0.7);
  EXPECT_EQ(d.iteration.damping, 0.7);
  EXPECT_THROW(apply_parameter(d, "nope", 1.0), ConfigError);
}

TEST(Report, EmptySweepIsOneRow) {
  ScenarioConfig c;
  c.params = unaware_market(0.5, 0.0, 0.2);
  c.timing = false;
  auto r = run_scenario(c);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_TRUE(r.all_converged());
  EXPECT_NEAR(r.rows[0].phi[0], 0.1344910055, 1e-9);
  EXPECT_EQ(run_scenario(recipe("fig6"), false).rows.size(), 1u);
}

TEST(Report, HeaderLayout) {
  auto q = report_header(recipe("fig9"));
  std::string joined;
  for (const auto& h : q) joined += h + ",";
  EXPECT_EQ(joined,
            "p1,s,phi_1,phi_2,share_sensor_1,share_sensor_2,share_requester_1,share_requester_2,"
            "share_alien,welfare,max_welfare,ratio,converged,iters,ms,");
  auto a = recipe("fig6");
  a.solver = Solver::Agents;
  auto h = report_header(a);
  EXPECT_EQ(h[0], "s");
  EXPECT_EQ(h[1], "seed");
  EXPECT_EQ(h[2], "phi_1");
}

TEST(Report, CsvCellsFollowTheHeader) {
  auto c = recipe("fig8");
  c.timing = false;
  auto csv = to_csv(run_scenario(c));
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  auto header = split(line);
  std::size_t rows = 0;
  while (std::getline(ss, line)) {
    EXPECT_EQ(split(line).size(), header.size());
    EXPECT_EQ(split(line).back(), "0");
    ++rows;
  }
  EXPECT_EQ(rows, 21u);
}

TEST(Report, EfficiencyRatioRisesWithTransmissionCost) {
  auto r = run_scenario(recipe("fig5"));
  ASSERT_EQ(r.rows.size(), 30u);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    EXPECT_TRUE(row.converged);
    EXPECT_LE(row.welfare.efficiency_ratio, 1.0 + 1e-12);
    if (i % 5) EXPECT_GE(row.welfare.efficiency_ratio, r.rows[i - 1].welfare.efficiency_ratio - 1e-9);
  }
}

TEST(Report, SensorShareDipsThenRecovers) {
  auto r = run_scenario(recipe("fig6"));
  std::vector<double> sensor;
  for (const auto& row : r.rows) sensor.push_back(row.shares.sensor[0]);
  auto low = std::min_element(sensor.begin(), sensor.end());
  EXPECT_LT(*low, sensor.front() - 1e-3);
  for (auto it = low + 1; it != sensor.end(); ++it) EXPECT_GE(*it, *(it - 1) - 1e-12);
  EXPECT_NEAR(sensor.back(), 0.5, 2e-3);
}

TEST(Report, NonConvergenceIsRecordedPerRow) {
  auto c = recipe("fig10");
  c.auto_damping = false;
  c.iteration.max_iters = 1;
  auto r = run_scenario(c);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_FALSE(r.rows[0].converged);
  EXPECT_FALSE(r.all_converged());
  EXPECT_EQ(r.rows[0].iters, 1u);
}

TEST(Report, AgentRowsPerSeed) {
  ScenarioConfig c;
  c.params = unaware_market(0.8, 0.0, 0.3);
  c.solver = Solver::Agents;
  c.population = 2000;
  c.seeds = {3, 4};
  c.iteration.max_iters = 500;
  c.sweep = {{"s", {0.2, 0.3}}};
  c.timing = false;
  auto r = run_scenario(c);
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_EQ(*r.rows[1].seed, 4u);
  EXPECT_EQ(r.rows[2].params[0], 0.3);
  auto again = run_scenario(c);
  EXPECT_EQ(to_csv(r), to_csv(again));
}

TEST(Report, GitBlobHash) {
  EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST(Report, WritesCsvAndSidecar) {
  auto dir = std::filesystem::temp_directory_path() / "csrs_report_test";
  std::filesystem::create_directories(dir);
  auto path = (dir / "fig8.csv").string();
  auto c = recipe("fig8");
  c.timing = false;
  auto r = run_scenario(c);
  write_report(c, r, path);
  std::ifstream csv(path), side(path + ".json");
  std::stringstream a, b;
  a << csv.rdbuf();
  b << side.rdbuf();
  EXPECT_EQ(a.str(), to_csv(r));
  auto j = nlohmann::json::parse(b.str());
  EXPECT_EQ(j["csv_sha1"], git_blob_sha1(a.str()));
  EXPECT_EQ(j["rows"], 21);
  EXPECT_EQ(j["nonconverged"], 0);
  EXPECT_EQ(config_from_json(j["config"]).name, "fig8");
  std::filesystem::remove_all(dir);
}

TEST(Trace, HeaderAndSteps) {
  auto tr = trace_scenario(recipe("fig12"));
  EXPECT_TRUE(tr.converged);
  auto csv = trace_csv(tr);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "t,phi_1,phi_2,share_sensor_1,share_sensor_2,share_requester_1,share_requester_2,"
            "share_alien,residual");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(tr.steps.size() + 1));
}
