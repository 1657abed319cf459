#pragma once

// Fixed-point residuals and the equilibrium solver for the quality-aware
// game under matching-quality or cross-quality sharing.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "csrs/dynamics.hpp"
#include "csrs/partition.hpp"
#include "csrs/sharing.hpp"

namespace csrs {

// Matching: Lambda_k = Phi_k |S_k| - price_k |R_k| (a revenue imbalance).
// Cross: Phi_k - Phi~_k(Phi) (a benefit gap), since cross payments are pooled.
struct QualityResidual {
  Mode mode = Mode::Matching;
  std::vector<double> values;

  double max_abs() const {
    double r = 0.0;
    for (double x : values) r = std::max(r, std::abs(x));
    return r;
  }
};

inline QualityResidual residual(const BenefitVector& phi, const MarketParams& m,
                                const QuadratureSpec& quad, Mode mode) {
  if (mode == Mode::Unaware) throw InvalidArgument("quality residual needs matching or cross");
  auto shares = measure_partition(phi, m, quad, mode).shares;
  QualityResidual out{mode, std::vector<double>(m.grades(), 0.0)};
  if (mode == Mode::Matching) {
    for (std::size_t k = 0; k < m.grades(); ++k)
      out.values[k] = phi[k] * shares.sensor[k] - quality_price(k, m) * shares.requester[k];
  } else {
    BenefitVector implied = avg_benefit(shares, m, mode);
    for (std::size_t k = 0; k < m.grades(); ++k) out.values[k] = phi[k] - implied[k];
  }
  return out;
}

struct QualityEquilibrium {
  BenefitVector phi;
  MarketShares shares;
  std::size_t iterations = 0;
  double residual = 0.0;  // max_k |Phi_k - Phi~_k(Phi)|
};

inline QualityEquilibrium solve_quality_equilibrium(const MarketParams& m,
                                                    const IterationConfig& cfg, Mode mode) {
  auto trace = iterate_quality(m, cfg, mode);
  if (!trace.converged)
    throw NonConvergence("quality iteration did not converge in " +
                         std::to_string(cfg.max_iters) + " steps");
  QualityEquilibrium out;
  out.phi = trace.final_phi();
  out.shares = trace.final_shares();
  out.iterations = trace.iterations();
  const double cap = cfg.phi_cap.value_or(default_phi_cap(m));
  BenefitVector implied = avg_benefit(out.shares, m, mode, cap);
  for (std::size_t k = 0; k < m.grades(); ++k)
    out.residual = std::max(out.residual, std::abs(out.phi[k] - implied[k]));
  if (out.residual > 10.0 * cfg.tolerance)
    throw NonConvergence("fixed-point gap " + std::to_string(out.residual) +
                         " exceeds tolerance after convergence");
  return out;
}

}  // namespace csrs
