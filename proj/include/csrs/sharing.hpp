#pragma once

// Average sharing benefit a sensor earns, given who requests and who senses.

#include <algorithm>
#include <vector>

#include "csrs/core.hpp"
#include "csrs/partition.hpp"

namespace csrs {

namespace detail {

// num / den with the empty-sensor rule: cap when there is demand, else 0.
inline double capped_ratio(double num, double den, double cap) {
  if (den <= 0.0) return num > 0.0 ? cap : 0.0;
  return std::clamp(num / den, 0.0, cap);
}

}  // namespace detail

// payments[k] is the total paid by grade-k requesters. Matching: each grade's
// payments are split among same-grade sensors. Cross: grade-i payments are
// split among all sensors of grade >= i, so Phi_k accumulates over i <= k.
// Unaware is the single-grade matching case.
inline BenefitVector benefit_from_payments(const std::vector<double>& payments,
                                           const std::vector<double>& sensor_share, Mode mode,
                                           double cap) {
  const std::size_t K = payments.size();
  if (sensor_share.size() != K) throw InvalidArgument("payment and share lengths differ");
  BenefitVector phi = BenefitVector::zeros(K);
  if (mode != Mode::Cross) {
    for (std::size_t k = 0; k < K; ++k)
      phi[k] = detail::capped_ratio(payments[k], sensor_share[k], cap);
    return phi;
  }
  std::vector<double> tail(K + 1, 0.0);
  for (std::size_t j = K; j-- > 0;) tail[j] = tail[j + 1] + sensor_share[j];
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    acc += detail::capped_ratio(payments[k], tail[k], cap);
    phi[k] = std::min(acc, cap);
  }
  return phi;
}

// Sharing benefit implied by market shares under the fixed-price scheme
// (eta = 1): grade-k requesters each pay price(q_k).
inline BenefitVector avg_benefit(const MarketShares& shares, const MarketParams& m, Mode mode,
                                 double cap) {
  const std::size_t K = m.grades();
  if (shares.grades() != K || shares.requester.size() != K)
    throw InvalidArgument("share vector length does not match the quality grid");
  std::vector<double> pay(K);
  for (std::size_t k = 0; k < K; ++k) pay[k] = quality_price(k, m) * shares.requester[k];
  return benefit_from_payments(pay, shares.sensor, mode, cap);
}

inline BenefitVector avg_benefit(const MarketShares& shares, const MarketParams& m, Mode mode) {
  return avg_benefit(shares, m, mode, default_phi_cap(m));
}

}  // namespace csrs
