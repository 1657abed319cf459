#pragma once

// Damped best-response iteration of the population state:
//
//   Phi(t+1) = lambda Phi(t) + (1 - lambda) T(Phi(t))
//
// where T recomputes the partition at Phi(t) and returns the average
// sharing benefit it implies. lambda = 0 is pure best response.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "csrs/analytic.hpp"
#include "csrs/core.hpp"
#include "csrs/partition.hpp"
#include "csrs/sharing.hpp"

namespace csrs {

struct IterationConfig {
  double damping = 0.5;
  double tolerance = 1e-6;
  std::size_t max_iters = 100000;
  std::optional<BenefitVector> initial_phi;
  std::optional<MarketShares> initial_shares;
  std::optional<double> phi_cap;  // default_phi_cap(params) when absent
  QuadratureSpec quad{};
};

inline void validate(const IterationConfig& cfg) {
  if (!(cfg.damping >= 0.0 && cfg.damping < 1.0))
    throw InvalidArgument("damping must lie in [0, 1)");
  if (!(cfg.tolerance > 0.0)) throw InvalidArgument("tolerance must be > 0");
  if (cfg.max_iters == 0) throw InvalidArgument("max_iters must be >= 1");
  if (cfg.phi_cap && !(*cfg.phi_cap > 0.0 && std::isfinite(*cfg.phi_cap)))
    throw InvalidArgument("phi_cap must be finite and > 0");
  validate(cfg.quad);
}

struct IterationStep {
  std::size_t t = 0;
  BenefitVector phi;
  MarketShares shares;  // partition induced by phi
  double residual = 0.0;  // sum_k |phi_k(t) - phi_k(t-1)|; 0 for t = 0
};

struct IterationTrace {
  std::vector<IterationStep> steps;
  bool converged = false;

  const BenefitVector& final_phi() const { return steps.back().phi; }
  const MarketShares& final_shares() const { return steps.back().shares; }
  std::size_t iterations() const { return steps.size() - 1; }
};

namespace detail {

inline IterationTrace run_iteration(const MarketParams& m, const IterationConfig& cfg, Mode mode,
                                    BenefitVector phi) {
  const double cap = cfg.phi_cap.value_or(default_phi_cap(m));
  const double lam = cfg.damping;
  for (double& x : phi.values) x = std::min(x, cap);
  validate(phi, m.grades());

  IterationTrace trace;
  trace.steps.push_back({0, phi, {}, 0.0});
  for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
    auto pm = measure_partition(phi, m, cfg.quad, mode);
    trace.steps.back().shares = pm.shares;
    BenefitVector target = benefit_from_payments(pm.payments, pm.shares.sensor, mode, cap);
    BenefitVector next = phi;
    double residual = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) {
      next[k] = lam * phi[k] + (1.0 - lam) * target[k];
      residual += std::abs(next[k] - phi[k]);
    }
    phi = std::move(next);
    trace.steps.push_back({t, phi, {}, residual});
    if (residual < cfg.tolerance) {
      trace.converged = true;
      break;
    }
  }
  trace.steps.back().shares = measure_partition(phi, m, cfg.quad, mode).shares;
  return trace;
}

}  // namespace detail

// Single-grade iteration. Needs cfg.initial_phi.
inline IterationTrace iterate_unaware(const MarketParams& m, const IterationConfig& cfg) {
  validate(m);
  validate(cfg);
  if (m.grades() != 1) throw InvalidArgument("unaware iteration needs a single quality grade");
  if (!cfg.initial_phi) throw InvalidArgument("unaware iteration needs an initial phi");
  return detail::run_iteration(m, cfg, Mode::Unaware, *cfg.initial_phi);
}

// Quality-aware iteration (eta = 1). Starts from cfg.initial_phi, or from the
// benefit implied by cfg.initial_shares, or from Phi = 0.
inline IterationTrace iterate_quality(const MarketParams& m, const IterationConfig& cfg,
                                      Mode mode) {
  validate(m);
  validate(cfg);
  if (mode == Mode::Unaware) throw InvalidArgument("quality iteration needs matching or cross");
  if (m.eta != 1.0) throw UnsupportedParameters("quality-aware pricing assumes eta = 1");
  const double cap = cfg.phi_cap.value_or(default_phi_cap(m));
  BenefitVector phi = BenefitVector::zeros(m.grades());
  if (cfg.initial_phi)
    phi = *cfg.initial_phi;
  else if (cfg.initial_shares)
    phi = avg_benefit(*cfg.initial_shares, m, mode, cap);
  return detail::run_iteration(m, cfg, mode, std::move(phi));
}

// ---------------------------------------------------------------------------
// Damping thresholds

// Slope bound of T = B/N at the point where it is steepest for the regime:
// phi = 0 on the low branch, phi = phi0 on the high branch. With
// -T' = first / second, damping above (first - second) / (first + second)
// makes the iteration a contraction there.
struct ContractionBounds {
  Regime regime = Regime::NoSharing;
  double first = 0.0;   // P1 or Q1: -(B'N - BN')
  double second = 0.0;  // P2 or Q2: N^2
  double lambda0 = 0.0;
};

inline constexpr double kDampingMargin = 1e-3;

inline double threshold_from(double first, double second) {
  if (first < second) return 0.0;
  return (first - second) / (first + second) + kDampingMargin;
}

inline ContractionBounds contraction_bounds(const MarketParams& m) {
  detail::require_closed_form(m);
  ContractionBounds out;
  auto cls = classify_regime(m);
  out.regime = cls.regime;
  if (cls.regime == Regime::NoSharing) return out;
  BranchValues b = cls.regime == Regime::LowBenefit ? low_branch(0.0, m) : high_branch(cls.phi0, m);
  out.first = -(b.dB * b.N - b.B * b.dN);
  out.second = b.N * b.N;
  out.lambda0 = threshold_from(out.first, out.second);
  return out;
}

// lambda_0 for the single-grade game with 0 < eta < 1.
inline double damping_threshold(const MarketParams& m) { return contraction_bounds(m).lambda0; }

// Doubling search over lambda in {0, 1/2, 3/4, ...}: the first damping whose
// trace converges. Heuristic; used where the closed-form bound is singular.
inline std::optional<double> empirical_damping_threshold(const MarketParams& m,
                                                         IterationConfig cfg, Mode mode,
                                                         int max_halvings = 12) {
  double lam = 0.0;
  for (int i = 0; i <= max_halvings; ++i) {
    cfg.damping = lam;
    if (mode == Mode::Unaware && !cfg.initial_phi) cfg.initial_phi = BenefitVector::scalar(0.0);
    auto trace = mode == Mode::Unaware ? iterate_unaware(m, cfg) : iterate_quality(m, cfg, mode);
    if (trace.converged) return lam;
    lam = 1.0 - 0.5 * (1.0 - lam);
  }
  return std::nullopt;
}

}  // namespace csrs
