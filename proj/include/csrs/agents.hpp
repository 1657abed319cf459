#pragma once

// Finite-population simulation. N users are drawn uniformly from the type
// square; each round every user independently re-best-responds with
// probability 1 - lambda to the empirical sharing benefit of the previous
// round (total requester payments divided by the number of sensors).
//
// Sensor/requester pairing is not simulated per pair: with a common
// transmission cost only the totals matter for payoffs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <random>
#include <thread>
#include <vector>

#include "csrs/core.hpp"
#include "csrs/dynamics.hpp"
#include "csrs/partition.hpp"
#include "csrs/sharing.hpp"

namespace csrs {

struct Population {
  std::vector<UserType> users;
  std::uint64_t seed = 0;

  std::size_t size() const { return users.size(); }
};

// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
// unlike std::uniform_real_distribution.
inline double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Population sample_population(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("population size must be >= 1");
  Population pop{{}, seed};
  pop.users.reserve(n);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    double v = unit_draw(rng);
    double c = unit_draw(rng);
    pop.users.push_back({v, c});
  }
  return pop;
}

struct AgentSimResult {
  MarketShares shares;
  BenefitVector phi;
  std::size_t rounds = 0;
  bool converged = false;
  std::size_t replicate = 0;
};

struct AgentSimOptions {
  // Rounds in a row the residual must stay below tolerance.
  std::size_t quiet_rounds = 5;
};

namespace detail {

inline BenefitVector empirical_benefit(const Population& pop, const std::vector<std::size_t>& choice,
                                       const std::vector<Action>& table, const MarketParams& m,
                                       Mode mode, double cap, MarketShares* shares_out) {
  const std::size_t K = m.grades();
  const double n = static_cast<double>(pop.size());
  std::vector<double> pay(K, 0.0);
  MarketShares shares = MarketShares::empty(K);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto& a = table[choice[i]].choice;
    switch (a.role) {
      case Role::Sensor: shares.sensor[*a.quality] += 1.0; break;
      case Role::Requester:
        shares.requester[*a.quality] += 1.0;
        pay[*a.quality] += requester_reward(pop.users[i], *a.quality, m);
        break;
      case Role::Alien: shares.alien += 1.0; break;
    }
  }
  for (auto& x : shares.sensor) x /= n;
  for (auto& x : shares.requester) x /= n;
  shares.alien /= n;
  for (auto& x : pay) x /= n;
  if (shares_out) *shares_out = shares;
  return benefit_from_payments(pay, shares.sensor, mode, cap);
}

// Action indices are stable across rounds: action_table's order only
// depends on the grid, never on Phi.
inline std::size_t respond(const std::vector<Action>& table, const UserType& u) {
  return best_index(table, u.v, u.c);
}

}  // namespace detail

// cfg.damping may be 1 here (nobody ever updates). The update stream is
// derived from pop.seed.
inline AgentSimResult run_finite_simulation(const Population& pop, const MarketParams& m,
                                            const IterationConfig& cfg, Mode mode,
                                            AgentSimOptions opt = {}) {
  validate(m);
  if (!(cfg.damping >= 0.0 && cfg.damping <= 1.0))
    throw InvalidArgument("damping must lie in [0, 1]");
  if (!(cfg.tolerance > 0.0)) throw InvalidArgument("tolerance must be > 0");
  if (pop.users.empty()) throw InvalidArgument("population is empty");
  if (mode == Mode::Unaware && m.grades() != 1)
    throw InvalidArgument("unaware simulation needs a single quality grade");
  const double cap = cfg.phi_cap.value_or(default_phi_cap(m));
  const std::size_t K = m.grades();

  BenefitVector phi = BenefitVector::zeros(K);
  if (cfg.initial_phi)
    phi = *cfg.initial_phi;
  else if (cfg.initial_shares && mode != Mode::Unaware)
    phi = avg_benefit(*cfg.initial_shares, m, mode, cap);
  validate(phi, K);

  auto table = action_table(phi, m);
  std::vector<std::size_t> choice(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) choice[i] = detail::respond(table, pop.users[i]);

  std::seed_seq seq{static_cast<std::uint32_t>(pop.seed), static_cast<std::uint32_t>(pop.seed >> 32),
                    0x5eedu};
  std::mt19937_64 rng(seq);

  AgentSimResult out;
  phi = detail::empirical_benefit(pop, choice, table, m, mode, cap, &out.shares);
  std::size_t quiet = 0;
  for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
    table = action_table(phi, m);
    for (std::size_t i = 0; i < pop.size(); ++i) {
      // One draw per user per round keeps the stream aligned across runs.
      if (unit_draw(rng) >= cfg.damping) choice[i] = detail::respond(table, pop.users[i]);
    }
    BenefitVector next = detail::empirical_benefit(pop, choice, table, m, mode, cap, &out.shares);
    double residual = 0.0;
    for (std::size_t k = 0; k < K; ++k) residual += std::abs(next[k] - phi[k]);
    phi = std::move(next);
    out.rounds = t;
    quiet = residual < cfg.tolerance ? quiet + 1 : 0;
    if (quiet >= opt.quiet_rounds) {
      out.converged = true;
      break;
    }
  }
  out.phi = phi;
  return out;
}

struct ReplicateSummary {
  std::vector<AgentSimResult> runs;
  MarketShares mean;
  MarketShares stderr_;  // standard error of the mean per entry
  BenefitVector phi_mean;
  BenefitVector phi_stderr;
  std::size_t converged = 0;
};

namespace detail {

inline void mean_and_se(const std::vector<double>& xs, double& mean, double& se) {
  const double n = static_cast<double>(xs.size());
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  se = xs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

}  // namespace detail

// Independent replicates, one population per seed, run on `threads` workers.
// Results are stored in seed order.
inline ReplicateSummary run_replicates(std::size_t n, const std::vector<std::uint64_t>& seeds,
                                       const MarketParams& m, const IterationConfig& cfg, Mode mode,
                                       unsigned threads = 0) {
  if (seeds.empty()) throw InvalidArgument("replicate seed list is empty");
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(seeds.size()));

  ReplicateSummary out;
  out.runs.resize(seeds.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(seeds.size());
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();) {
      try {
        auto pop = sample_population(n, seeds[i]);
        out.runs[i] = run_finite_simulation(pop, m, cfg, mode);
        out.runs[i].replicate = i;
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

  const std::size_t K = m.grades();
  out.mean = MarketShares::empty(K);
  out.stderr_ = MarketShares::empty(K);
  out.phi_mean = BenefitVector::zeros(K);
  out.phi_stderr = BenefitVector::zeros(K);
  std::vector<double> xs(seeds.size());
  auto column = [&](auto get, double& mean, double& se) {
    for (std::size_t i = 0; i < seeds.size(); ++i) xs[i] = get(out.runs[i]);
    detail::mean_and_se(xs, mean, se);
  };
  for (std::size_t k = 0; k < K; ++k) {
    column([k](const AgentSimResult& r) { return r.shares.sensor[k]; }, out.mean.sensor[k],
           out.stderr_.sensor[k]);
    column([k](const AgentSimResult& r) { return r.shares.requester[k]; }, out.mean.requester[k],
           out.stderr_.requester[k]);
    column([k](const AgentSimResult& r) { return r.phi[k]; }, out.phi_mean[k], out.phi_stderr[k]);
  }
  column([](const AgentSimResult& r) { return r.shares.alien; }, out.mean.alien, out.stderr_.alien);
  for (const auto& r : out.runs) out.converged += r.converged ? 1 : 0;
  return out;
}

}  // namespace csrs
