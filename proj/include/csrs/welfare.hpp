#pragma once

// Social welfare of a partition and the centralized optimum.
//
// Transfers (Phi, beta, prices) move money between users and cancel in the
// aggregate, so they never enter the integrand: a sensor contributes its
// utility minus sensing cost, a requester its utility minus transmission
// cost, an alien nothing.

#include <vector>

#include "csrs/core.hpp"
#include "csrs/partition.hpp"

namespace csrs {

struct WelfareReport {
  double equilibrium_welfare = 0.0;
  double max_welfare = 0.0;
  double efficiency_ratio = 1.0;
};

namespace detail {

// Welfare density of a sensor of grade k, as an affine field over (v, c).
inline geometry::Affine sensor_welfare(std::size_t k, const MarketParams& m) {
  double f = m.value_curve(m.quality_grid[k]);
  double g = m.cost_curve(m.quality_grid[k]);
  return {m.w * m.value_offset - m.cost_offset, m.w * f, -g};
}

inline geometry::Affine requester_welfare(std::size_t k, const MarketParams& m) {
  double f = m.value_curve(m.quality_grid[k]);
  return {m.w * m.value_offset - m.s, m.w * f, 0.0};
}

}  // namespace detail

inline double social_welfare(const BenefitVector& phi, const MarketParams& m,
                             const QuadratureSpec& quad, Mode mode) {
  validate(m);
  if (mode == Mode::Unaware && m.grades() != 1)
    throw InvalidArgument("unaware welfare needs a single quality grade");
  auto table = action_table(phi, m);
  auto mom = region_moments(table, quad);
  double total = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& a = table[i].choice;
    if (a.role == Role::Sensor) total += mom[i].integrate(detail::sensor_welfare(*a.quality, m));
    if (a.role == Role::Requester)
      total += mom[i].integrate(detail::requester_welfare(*a.quality, m));
  }
  return total;
}

// Every type picks the welfare-maximizing option among abstaining, sensing
// at any grade and requesting at any grade.
inline double max_welfare_quality(const MarketParams& m, const QuadratureSpec& quad = {}) {
  validate(m);
  std::vector<Action> options;
  for (std::size_t k = 0; k < m.grades(); ++k)
    options.push_back({ActionChoice::sensor(k), detail::sensor_welfare(k, m)});
  for (std::size_t k = 0; k < m.grades(); ++k)
    options.push_back({ActionChoice::requester(k), detail::requester_welfare(k, m)});
  options.push_back({ActionChoice::alien(), {}});
  auto mom = region_moments(options, quad);
  double total = 0.0;
  for (std::size_t i = 0; i < options.size(); ++i) total += mom[i].integrate(options[i].payoff);
  return total;
}

// Single grade: sensors where v > c and c < s, requesters where v > s and
// c > s.
inline double max_welfare_unaware(const MarketParams& m, const QuadratureSpec& quad = {}) {
  if (m.grades() != 1) throw InvalidArgument("unaware benchmark needs a single quality grade");
  return max_welfare_quality(m, quad);
}

inline WelfareReport welfare_report(const BenefitVector& phi, const MarketParams& m,
                                    const QuadratureSpec& quad, Mode mode) {
  WelfareReport r;
  r.equilibrium_welfare = social_welfare(phi, m, quad, mode);
  r.max_welfare = mode == Mode::Unaware ? max_welfare_unaware(m, quad) : max_welfare_quality(m, quad);
  r.efficiency_ratio = r.max_welfare > 0.0 ? r.equilibrium_welfare / r.max_welfare : 1.0;
  return r;
}

}  // namespace csrs
