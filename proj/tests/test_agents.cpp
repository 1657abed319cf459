#include <gtest/gtest.h>

#include <cmath>

#include "csrs/agents.hpp"
#include "csrs/quality_market.hpp"

using namespace csrs;

namespace {

IterationConfig agent_cfg(double damping, std::size_t max_iters = 2000) {
  IterationConfig cfg;
  cfg.damping = damping;
  cfg.tolerance = 1e-9;
  cfg.max_iters = max_iters;
  return cfg;
}

double share_sum(const MarketShares& s) { return s.total(); }

}  // namespace

TEST(Population, DeterministicPerSeed) {
  auto a = sample_population(1000, 7);
  auto b = sample_population(1000, 7);
  auto c = sample_population(1000, 8);
  ASSERT_EQ(a.size(), 1000u);
  bool same = true, differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    same = same && a.users[i].v == b.users[i].v && a.users[i].c == b.users[i].c;
    differs = differs || a.users[i].v != c.users[i].v;
    EXPECT_GE(a.users[i].v, 0.0);
    EXPECT_LT(a.users[i].v, 1.0);
    EXPECT_GE(a.users[i].c, 0.0);
    EXPECT_LT(a.users[i].c, 1.0);
  }
  EXPECT_TRUE(same);
  EXPECT_TRUE(differs);
}

TEST(Population, UniformMean) {
  auto pop = sample_population(1000000, 3);
  double mv = 0.0, mc = 0.0;
  for (const auto& u : pop.users) {
    mv += u.v;
    mc += u.c;
  }
  EXPECT_NEAR(mv / 1e6, 0.5, 0.002);
  EXPECT_NEAR(mc / 1e6, 0.5, 0.002);
}

TEST(Population, RejectsEmpty) { EXPECT_THROW(sample_population(0, 1), InvalidArgument); }

TEST(FiniteSimulation, SingleUser) {
  auto r = run_finite_simulation(sample_population(1, 5), unaware_market(0.5, 0.0, 0.2),
                                 agent_cfg(0.5), Mode::Unaware);
  for (double x : {r.shares.sensor[0], r.shares.requester[0], r.shares.alien})
    EXPECT_TRUE(x == 0.0 || x == 1.0);
  EXPECT_EQ(share_sum(r.shares), 1.0);
}

TEST(FiniteSimulation, FullDampingKeepsTheInitialAssignment) {
  auto m = unaware_market(0.5, 0.0, 0.2);
  auto pop = sample_population(5000, 9);
  auto cfg = agent_cfg(1.0);
  cfg.initial_phi = BenefitVector::scalar(0.3);
  auto r = run_finite_simulation(pop, m, cfg, Mode::Unaware);
  MarketShares expect = MarketShares::empty(1);
  for (const auto& u : pop.users) {
    auto a = best_response_unaware(u, 0.3, m);
    if (a.role == Role::Sensor) expect.sensor[0] += 1.0 / 5000;
    if (a.role == Role::Requester) expect.requester[0] += 1.0 / 5000;
    if (a.role == Role::Alien) expect.alien += 1.0 / 5000;
  }
  EXPECT_NEAR(r.shares.sensor[0], expect.sensor[0], 1e-12);
  EXPECT_NEAR(r.shares.requester[0], expect.requester[0], 1e-12);
  EXPECT_NEAR(r.shares.alien, expect.alien, 1e-12);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.rounds, 5u);
}

TEST(FiniteSimulation, Reproducible) {
  auto m = quality_market();
  auto pop = sample_population(3000, 4);
  auto a = run_finite_simulation(pop, m, agent_cfg(0.5), Mode::Cross);
  auto b = run_finite_simulation(pop, m, agent_cfg(0.5), Mode::Cross);
  EXPECT_EQ(a.shares, b.shares);
  EXPECT_EQ(a.phi, b.phi);
  EXPECT_EQ(a.rounds, b.rounds);
}

TEST(FiniteSimulation, MatchesContinuumSharesUnaware) {
  for (auto [eta, s] : {std::pair{1.0, 0.2}, {0.5, 0.2}}) {
    auto m = unaware_market(eta, 0.0, s);
    auto eq = solve_unaware_equilibrium(m);
    auto r = run_finite_simulation(sample_population(100000, 17), m, agent_cfg(0.5), Mode::Unaware);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.shares.sensor[0], eq.shares.sensor[0], 0.01);
    EXPECT_NEAR(r.shares.requester[0], eq.shares.requester[0], 0.01);
    EXPECT_NEAR(r.shares.alien, eq.shares.alien, 0.01);
    EXPECT_NEAR(share_sum(r.shares), 1.0, 1e-12);
  }
}

TEST(FiniteSimulation, MatchesContinuumBenefitQuality) {
  auto m = quality_market();
  for (Mode mode : {Mode::Matching, Mode::Cross}) {
    auto eq = solve_quality_equilibrium(m, {}, mode);
    auto r = run_finite_simulation(sample_population(100000, 23), m, agent_cfg(0.5), mode);
    EXPECT_NEAR(r.phi[0], eq.phi[0], 0.02);
    EXPECT_NEAR(r.phi[1], eq.phi[1], 0.02);
  }
}

TEST(FiniteSimulation, NoRequestersMeansNoBenefit) {
  auto m = unaware_market(0.8, 0.0, 5.0);
  auto r = run_finite_simulation(sample_population(2000, 2), m, agent_cfg(0.5), Mode::Unaware);
  EXPECT_EQ(r.phi[0], 0.0);
  EXPECT_EQ(r.shares.requester[0], 0.0);
  EXPECT_TRUE(r.converged);
}

TEST(FiniteSimulation, DeviationShrinksLikeRootN) {
  auto m = unaware_market(0.5, 0.0, 0.2);
  auto eq = solve_unaware_equilibrium(m);
  auto mean_dev = [&](std::size_t n) {
    double dev = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      auto r = run_finite_simulation(sample_population(n, seed), m, agent_cfg(0.5), Mode::Unaware);
      dev += std::abs(r.shares.sensor[0] - eq.shares.sensor[0]);
    }
    return dev / 20.0;
  };
  double small = mean_dev(5000), large = mean_dev(20000);
  EXPECT_LT(large, 0.75 * small) << small << " " << large;
  EXPECT_GT(large, 0.25 * small) << small << " " << large;
}

TEST(FiniteSimulation, RejectsBadInput) {
  auto pop = sample_population(10, 1);
  EXPECT_THROW(run_finite_simulation(pop, quality_market(), agent_cfg(0.5), Mode::Unaware),
               InvalidArgument);
  EXPECT_THROW(run_finite_simulation(pop, unaware_market(0.5, 0.0, 0.2), agent_cfg(1.5), Mode::Unaware),
               InvalidArgument);
  EXPECT_THROW(run_finite_simulation(Population{}, unaware_market(0.5, 0.0, 0.2), agent_cfg(0.5),
                                     Mode::Unaware),
               InvalidArgument);
}

TEST(Replicates, IndependentOfThreadCount) {
  auto m = quality_market();
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  auto one = run_replicates(2000, seeds, m, agent_cfg(0.5), Mode::Matching, 1);
  auto many = run_replicates(2000, seeds, m, agent_cfg(0.5), Mode::Matching, 4);
  ASSERT_EQ(one.runs.size(), 5u);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    EXPECT_EQ(one.runs[i].shares, many.runs[i].shares);
    EXPECT_EQ(one.runs[i].replicate, i);
    auto solo = run_finite_simulation(sample_population(2000, seeds[i]), m, agent_cfg(0.5),
                                      Mode::Matching);
    EXPECT_EQ(solo.phi, one.runs[i].phi);
  }
  EXPECT_EQ(one.mean, many.mean);
  double mean = 0.0;
  for (const auto& r : one.runs) mean += r.shares.alien / 5.0;
  EXPECT_NEAR(one.mean.alien, mean, 1e-15);
  EXPECT_GT(one.stderr_.alien, 0.0);
  EXPECT_THROW(run_replicates(10, {}, m, agent_cfg(0.5), Mode::Matching), InvalidArgument);
}
