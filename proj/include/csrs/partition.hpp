#pragma once

// Best responses and the measure of each best-response region over the
// uniform type square.
//
// Two integration rules are available. `Exact` clips the unit square by the
// half-planes where one action beats every other (payoffs are affine in the
// type once the grade is fixed), which yields exact region measures that are
// continuous in Phi. `Midpoint` classifies the centers of an M x M grid; it is
// kept as an independent cross-check of the exact route.

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "csrs/core.hpp"
#include "csrs/geometry.hpp"

namespace csrs {

struct QuadratureSpec {
  enum class Rule { Exact, Midpoint };

  std::size_t resolution = 800;  // cells per axis for the midpoint rule
  Rule rule = Rule::Exact;

  static QuadratureSpec midpoint(std::size_t m) { return {m, Rule::Midpoint}; }
  static QuadratureSpec exact() { return {}; }
};

inline const char* to_string(QuadratureSpec::Rule r) {
  return r == QuadratureSpec::Rule::Exact ? "exact" : "midpoint";
}

inline void validate(const QuadratureSpec& q) {
  if (q.rule == QuadratureSpec::Rule::Midpoint && q.resolution < 2)
    throw InvalidArgument("quadrature resolution must be >= 2");
}

// Fractions of the population per role and grade.
struct MarketShares {
  std::vector<double> sensor;
  std::vector<double> requester;
  double alien = 0.0;

  static MarketShares empty(std::size_t grades) {
    return {std::vector<double>(grades, 0.0), std::vector<double>(grades, 0.0), 0.0};
  }

  std::size_t grades() const { return sensor.size(); }

  double total_sensor() const {
    double t = 0.0;
    for (double x : sensor) t += x;
    return t;
  }
  double total_requester() const {
    double t = 0.0;
    for (double x : requester) t += x;
    return t;
  }
  double total() const { return total_sensor() + total_requester() + alien; }

  bool operator==(const MarketShares&) const = default;
};

// ---------------------------------------------------------------------------
// Action table

// One pure strategy with its payoff written as an affine field over (v, c).
struct Action {
  ActionChoice choice;
  geometry::Affine payoff;
};

// All 2K+1 strategies in tie-break priority order: sensors (highest grade
// first), then requesters (highest grade first), then alien. The first
// maximizer in this order wins a tie.
inline std::vector<Action> action_table(const BenefitVector& phi, const MarketParams& m) {
  validate(phi, m.grades());
  const std::size_t K = m.grades();
  std::vector<Action> table;
  table.reserve(2 * K + 1);
  for (std::size_t i = 0; i < K; ++i) {
    std::size_t k = K - 1 - i;
    double f = m.value_curve(m.quality_grid[k]);
    double g = m.cost_curve(m.quality_grid[k]);
    table.push_back({ActionChoice::sensor(k),
                     {m.w * m.value_offset - m.cost_offset + phi[k], m.w * f, -g}});
  }
  for (std::size_t i = 0; i < K; ++i) {
    std::size_t k = K - 1 - i;
    double f = m.value_curve(m.quality_grid[k]);
    table.push_back({ActionChoice::requester(k),
                     {m.eta * (m.w * m.value_offset - m.s) - quality_price(k, m),
                      m.eta * m.w * f, 0.0}});
  }
  table.push_back({ActionChoice::alien(), {}});
  return table;
}

// Index into `table` of the winning action for a type.
inline std::size_t best_index(const std::vector<Action>& table, double v, double c) {
  std::size_t best = 0;
  double best_value = table[0].payoff(v, c);
  for (std::size_t i = 1; i < table.size(); ++i) {
    double x = table[i].payoff(v, c);
    if (x > best_value) {
      best_value = x;
      best = i;
    }
  }
  return best;
}

inline ActionChoice best_response_quality(const UserType& user, const BenefitVector& phi,
                                          const MarketParams& m) {
  auto table = action_table(phi, m);
  return table[best_index(table, user.v, user.c)].choice;
}

// Single-grade best response by direct payoff comparison, so eta = 0 and
// eta = 1 need no special-cased boundary geometry.
inline ActionChoice best_response_unaware(const UserType& user, double phi,
                                          const MarketParams& m) {
  if (m.grades() != 1) throw InvalidArgument("unaware best response needs a single grade");
  return best_response_quality(user, BenefitVector::scalar(phi), m);
}

// ---------------------------------------------------------------------------
// Region integration

// Exact polygon of the region where table[i] is the (tie-broken) best action.
inline geometry::Polygon region_polygon(const std::vector<Action>& table, std::size_t i) {
  geometry::Polygon poly = geometry::unit_square();
  for (std::size_t j = 0; j < table.size() && !poly.empty(); ++j) {
    if (j == i) continue;
    geometry::Affine diff = table[i].payoff - table[j].payoff;
    if (diff.is_zero()) {
      // Identical payoffs everywhere: priority decides.
      if (j < i) poly.clear();
      continue;
    }
    poly = geometry::clip(poly, diff);
  }
  return poly;
}

// Area and first moments of every action's region, aligned with `table`.
inline std::vector<geometry::Moments> region_moments(const std::vector<Action>& table,
                                                     const QuadratureSpec& quad) {
  validate(quad);
  std::vector<geometry::Moments> out(table.size());
  if (quad.rule == QuadratureSpec::Rule::Exact) {
    for (std::size_t i = 0; i < table.size(); ++i)
      out[i] = geometry::moments(region_polygon(table, i));
    return out;
  }
  const std::size_t M = quad.resolution;
  const double h = 1.0 / static_cast<double>(M);
  const double cell = h * h;
  // Rows are summed in index order so results do not depend on scheduling.
  for (std::size_t row = 0; row < M; ++row) {
    double c = (static_cast<double>(row) + 0.5) * h;
    std::vector<geometry::Moments> acc(table.size());
    for (std::size_t col = 0; col < M; ++col) {
      double v = (static_cast<double>(col) + 0.5) * h;
      auto& m = acc[best_index(table, v, c)];
      m.area += cell;
      m.mv += v * cell;
      m.mc += c * cell;
    }
    for (std::size_t i = 0; i < table.size(); ++i) out[i] += acc[i];
  }
  return out;
}

// Shares plus the integral of the requester reward over each requester
// region (the total payment flowing to grade-k sensors).
struct PartitionMeasure {
  MarketShares shares;
  std::vector<double> payments;
};

inline PartitionMeasure measure_partition(const BenefitVector& phi, const MarketParams& m,
                                          const QuadratureSpec& quad, Mode mode) {
  if (mode == Mode::Unaware && m.grades() != 1)
    throw InvalidArgument("unaware partition needs a single quality grade");
  auto table = action_table(phi, m);
  auto mom = region_moments(table, quad);
  const std::size_t K = m.grades();
  PartitionMeasure out{MarketShares::empty(K), std::vector<double>(K, 0.0)};
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& a = table[i].choice;
    switch (a.role) {
      case Role::Sensor: out.shares.sensor[*a.quality] = mom[i].area; break;
      case Role::Requester: {
        std::size_t k = *a.quality;
        out.shares.requester[k] = mom[i].area;
        double f = m.value_curve(m.quality_grid[k]);
        geometry::Affine beta{(1.0 - m.eta) * (m.w * m.value_offset - m.s) + quality_price(k, m),
                              (1.0 - m.eta) * m.w * f, 0.0};
        out.payments[k] = mom[i].integrate(beta);
        break;
      }
      case Role::Alien: out.shares.alien = mom[i].area; break;
    }
  }
  return out;
}

}  // namespace csrs
