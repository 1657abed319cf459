#pragma once

// Market primitives for the crowdsensing role-selection game: parameters,
// user types, actions and the payoff/pricing arithmetic every solver shares.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace csrs {

// ---------------------------------------------------------------------------
// Errors

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised when an analytic formula is singular for the given parameters
// (eta == 1 in the closed forms, non-normalized curves, ...).
struct UnsupportedParameters : std::domain_error {
  using std::domain_error::domain_error;
};

struct BracketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Curves

// Closed family of value/cost curves evaluated on the quality grid.
struct Curve {
  enum class Kind { Constant, Log1p, Power, Affine };

  Kind kind = Kind::Constant;
  double a = 0.0;  // Power: exponent. Affine: intercept.
  double b = 0.0;  // Affine: slope.

  static Curve constant() { return {}; }
  static Curve log1p() { return {Kind::Log1p, 0.0, 0.0}; }
  static Curve power(double exponent) { return {Kind::Power, exponent, 0.0}; }
  static Curve affine(double intercept, double slope) {
    return {Kind::Affine, intercept, slope};
  }

  double operator()(double q) const {
    switch (kind) {
      case Kind::Constant: return 1.0;
      case Kind::Log1p: return std::log1p(q);
      case Kind::Power: return std::pow(q, a);
      case Kind::Affine: return a + b * q;
    }
    return 1.0;
  }

  bool operator==(const Curve&) const = default;
};

inline const char* to_string(Curve::Kind kind) {
  switch (kind) {
    case Curve::Kind::Constant: return "constant";
    case Curve::Kind::Log1p: return "log1p";
    case Curve::Kind::Power: return "power";
    case Curve::Kind::Affine: return "affine";
  }
  return "constant";
}

// ---------------------------------------------------------------------------
// Market parameters

struct MarketParams {
  double w = 1.0;            // data weight
  double eta = 1.0;          // revenue share kept by the requester
  double price_base = 0.0;   // p0
  double price_slope = 0.0;  // p1; the quality price is p0 + p1 * q_k
  double s = 0.0;            // transmission cost c_dl + c_up
  std::vector<double> quality_grid{1.0};
  double value_offset = 0.0;  // alpha_v
  double cost_offset = 0.0;   // alpha_c
  Curve value_curve{};        // f
  Curve cost_curve{};         // g

  std::size_t grades() const { return quality_grid.size(); }

  double quality(std::size_t k) const {
    if (k >= quality_grid.size())
      throw InvalidArgument("quality index " + std::to_string(k) +
                            " out of range (K=" +
                            std::to_string(quality_grid.size()) + ")");
    return quality_grid[k];
  }

  bool operator==(const MarketParams&) const = default;
};

// Throws InvalidArgument describing the first violated invariant.
inline void validate(const MarketParams& m) {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(m.w) || m.w <= 0.0) throw InvalidArgument("w must be finite and > 0");
  if (!finite(m.eta) || m.eta < 0.0 || m.eta > 1.0)
    throw InvalidArgument("eta must lie in [0, 1]");
  if (!finite(m.s) || m.s < 0.0) throw InvalidArgument("s must be finite and >= 0");
  if (!finite(m.price_base) || !finite(m.price_slope))
    throw InvalidArgument("price coefficients must be finite");
  if (!finite(m.value_offset) || !finite(m.cost_offset))
    throw InvalidArgument("curve offsets must be finite");
  if (m.quality_grid.empty()) throw InvalidArgument("quality grid is empty");
  for (std::size_t k = 0; k < m.quality_grid.size(); ++k) {
    double q = m.quality_grid[k];
    if (!finite(q) || q <= 0.0) throw InvalidArgument("quality grid entries must be > 0");
    if (k > 0 && q <= m.quality_grid[k - 1])
      throw InvalidArgument("quality grid must be strictly increasing");
    if (m.price_base + m.price_slope * q < 0.0)
      throw InvalidArgument("quality price must be >= 0 on the grid");
    if (!finite(m.value_curve(q)) || !finite(m.cost_curve(q)))
      throw InvalidArgument("curves must be finite on the grid");
    // Constant curves are the single-grade normalization; with K > 1 every
    // curve has to separate the grades.
    if (k > 0) {
      double q0 = m.quality_grid[k - 1];
      if (m.value_curve(q) <= m.value_curve(q0))
        throw InvalidArgument("value curve must be strictly increasing on the grid");
      if (m.cost_curve(q) <= m.cost_curve(q0))
        throw InvalidArgument("cost curve must be strictly increasing on the grid");
      if (m.price_slope < 0.0)
        throw InvalidArgument("quality price must be nondecreasing in q");
    }
  }
}

// f = g = h = 1, no offsets: the single-grade game the closed forms describe.
inline bool is_unaware_normalized(const MarketParams& m) {
  return m.grades() == 1 && m.value_curve.kind == Curve::Kind::Constant &&
         m.cost_curve.kind == Curve::Kind::Constant && m.value_offset == 0.0 &&
         m.cost_offset == 0.0;
}

// Single-grade market with the given knobs; price is p0 (p1 = 0).
inline MarketParams unaware_market(double eta, double p, double s, double w = 1.0) {
  MarketParams m;
  m.w = w;
  m.eta = eta;
  m.price_base = p;
  m.price_slope = 0.0;
  m.s = s;
  return m;
}

// Two-grade setup used throughout the quality-aware experiments:
// value 0.4 + v log(1+q), cost 0.1 + c sqrt(q), price 0.1 + p1 q, q in {1, 2}.
inline MarketParams quality_market(double s = 0.2, double price_slope = 0.35) {
  MarketParams m;
  m.w = 1.0;
  m.eta = 1.0;
  m.price_base = 0.1;
  m.price_slope = price_slope;
  m.s = s;
  m.quality_grid = {1.0, 2.0};
  m.value_offset = 0.4;
  m.cost_offset = 0.1;
  m.value_curve = Curve::log1p();
  m.cost_curve = Curve::power(0.5);
  return m;
}

// ---------------------------------------------------------------------------
// Users and actions

struct UserType {
  double v = 0.0;  // marginal value
  double c = 0.0;  // marginal sensing cost
};

inline void validate(const UserType& u) {
  if (!(u.v >= 0.0 && u.v <= 1.0 && u.c >= 0.0 && u.c <= 1.0))
    throw InvalidArgument("user type must lie in the unit square");
}

enum class Role { Sensor, Requester, Alien };

// Which game is being played: single-grade with revenue sharing, or the
// quality-aware game with matching-quality or cross-quality sharing.
enum class Mode { Unaware, Matching, Cross };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Unaware: return "unaware";
    case Mode::Matching: return "matching";
    case Mode::Cross: return "cross";
  }
  return "unaware";
}

inline const char* to_string(Role r) {
  switch (r) {
    case Role::Sensor: return "sensor";
    case Role::Requester: return "requester";
    case Role::Alien: return "alien";
  }
  return "alien";
}

// Quality indices are zero-based: k in [0, K).
struct ActionChoice {
  Role role = Role::Alien;
  std::optional<std::size_t> quality;

  static ActionChoice sensor(std::size_t k) { return {Role::Sensor, k}; }
  static ActionChoice requester(std::size_t k) { return {Role::Requester, k}; }
  static ActionChoice alien() { return {Role::Alien, std::nullopt}; }

  bool operator==(const ActionChoice&) const = default;
};

inline void validate(const ActionChoice& a, std::size_t grades) {
  if ((a.role == Role::Alien) == a.quality.has_value())
    throw InvalidArgument("quality index must be present iff role is not alien");
  if (a.quality && *a.quality >= grades)
    throw InvalidArgument("quality index out of range");
}

// Per-grade average sharing benefit Phi_k.
struct BenefitVector {
  std::vector<double> values;

  BenefitVector() = default;
  explicit BenefitVector(std::vector<double> v) : values(std::move(v)) {}
  static BenefitVector zeros(std::size_t k) { return BenefitVector(std::vector<double>(k, 0.0)); }
  static BenefitVector scalar(double phi) { return BenefitVector({phi}); }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t k) const { return values[k]; }
  double& operator[](std::size_t k) { return values[k]; }

  bool operator==(const BenefitVector&) const = default;
};

inline void validate(const BenefitVector& phi, std::size_t grades) {
  if (phi.size() != grades)
    throw InvalidArgument("benefit vector has length " + std::to_string(phi.size()) +
                          ", expected " + std::to_string(grades));
  for (double x : phi.values)
    if (!std::isfinite(x) || x < 0.0)
      throw InvalidArgument("benefit vector entries must be finite and >= 0");
}

// ---------------------------------------------------------------------------
// Payoff arithmetic

// w * (alpha_v + v f(q_k))
inline double utility(const UserType& user, std::size_t k, const MarketParams& m) {
  return m.w * (m.value_offset + user.v * m.value_curve(m.quality(k)));
}

// alpha_c + c g(q_k)
inline double sensing_cost(const UserType& user, std::size_t k, const MarketParams& m) {
  return m.cost_offset + user.c * m.cost_curve(m.quality(k));
}

// p h(q_k), realized as p0 + p1 q_k.
inline double quality_price(std::size_t k, const MarketParams& m) {
  return m.price_base + m.price_slope * m.quality(k);
}

// Upper bound for any sharing benefit. At this level a sensor of every grade
// strictly beats every requester action and every type with v > 0 senses, so
// larger values cannot change the partition. Reduces to 1 + s + max price for
// the single-grade normalization.
inline double default_phi_cap(const MarketParams& m) {
  double cost = 1.0;
  double price = 0.0;
  for (std::size_t k = 0; k < m.grades(); ++k) {
    cost = std::max(cost, m.cost_offset + m.cost_curve(m.quality_grid[k]));
    price = std::max(price, m.price_base + m.price_slope * m.quality_grid[k]);
  }
  return cost + m.s + price;
}

// beta = (1 - eta)(u - s) + price: what a requester hands to the sensor.
inline double requester_reward(const UserType& user, std::size_t k, const MarketParams& m) {
  return (1.0 - m.eta) * (utility(user, k, m) - m.s) + quality_price(k, m);
}

inline double payoff(const UserType& user, const ActionChoice& choice,
                     const BenefitVector& phi, const MarketParams& m) {
  validate(choice, m.grades());
  if (phi.size() != m.grades())
    throw InvalidArgument("benefit vector length does not match the quality grid");
  switch (choice.role) {
    case Role::Sensor: {
      std::size_t k = *choice.quality;
      return utility(user, k, m) - sensing_cost(user, k, m) + phi[k];
    }
    case Role::Requester: {
      std::size_t k = *choice.quality;
      return m.eta * (utility(user, k, m) - m.s) - quality_price(k, m);
    }
    case Role::Alien: return 0.0;
  }
  return 0.0;
}

}  // namespace csrs
