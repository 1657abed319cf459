#pragma once

// Closed-form equilibrium machinery for the single-grade (quality-unaware)
// game with f = g = h = 1 and w = 1.
//
// Notation. a = s + p/eta is the value above which requesting pays off,
// D = 1 - a, L = D - phi. Writing u = v - a, the requester region is the
// strip u in [0, X] above the sensor/requester boundary with height
// L - (1 - eta) u, and each requester pays beta = (1 - eta) u + p/eta.
// X = D while phi <= phi0 (low branch) and X = L / (1 - eta) above it
// (high branch), so
//
//   R(X) = L X - (1 - eta) X^2 / 2
//   B(X) = (1 - eta) L X^2 / 2 - (1 - eta)^2 X^3 / 3 + (p/eta) R(X)
//   N    = 1 - R - A,  A = alien area,
//   Lambda(phi) = phi N - B.
//
// These were re-derived from the region geometry and are checked against
// the exact polygon integrator in the tests.

#include <cmath>
#include <functional>
#include <limits>

#include "csrs/core.hpp"
#include "csrs/partition.hpp"

namespace csrs {

enum class Regime { HighBenefit, LowBenefit, Boundary, NoSharing };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::HighBenefit: return "high";
    case Regime::LowBenefit: return "low";
    case Regime::Boundary: return "boundary";
    case Regime::NoSharing: return "none";
  }
  return "none";
}

struct RegimeClassification {
  Regime regime = Regime::NoSharing;
  double lambda_at_phi0 = 0.0;
  double phi0 = 0.0;
};

struct UnawareEquilibrium {
  double phi_star = 0.0;
  MarketShares shares;
  RegimeClassification regime;
  double residual = 0.0;
};

// Value of the aggregate quantities on one branch together with their
// derivatives in phi.
struct BranchValues {
  double B = 0.0;   // total payment from requesters
  double N = 0.0;   // sensor share
  double dB = 0.0;
  double dN = 0.0;

  double lambda(double phi) const { return phi * N - B; }
  // d(B/N)/dphi
  double psi() const { return (dB * N - B * dN) / (N * N); }
};

// phi0 = 1 - eta s - p - w (1 - eta). May be negative.
inline double phi_critical(const MarketParams& m) {
  return 1.0 - m.eta * m.s - m.price_base - m.w * (1.0 - m.eta);
}

namespace detail {

inline void require_unaware(const MarketParams& m) {
  validate(m);
  if (!is_unaware_normalized(m))
    throw UnsupportedParameters("closed forms need a single grade with f = g = h = 1");
}

inline void require_closed_form(const MarketParams& m) {
  require_unaware(m);
  if (m.w != 1.0) throw UnsupportedParameters("closed forms assume w = 1");
  if (m.eta >= 1.0) throw UnsupportedParameters("closed forms are singular at eta = 1");
  if (m.eta <= 0.0) throw UnsupportedParameters("closed forms are singular at eta = 0");
}

// Area of {v < a, c > v + phi} inside the unit square.
inline double alien_area(double a, double phi) {
  double t = std::clamp(std::min(a, 1.0 - phi), 0.0, 1.0);
  return t * (1.0 - phi) - 0.5 * t * t;
}

inline double d_alien_area(double a, double phi) {
  double t = std::min(a, 1.0 - phi);
  if (t <= 0.0 || t > 1.0) return 0.0;
  // A = t (1 - phi) - t^2/2. When t = 1 - phi, A = (1 - phi)^2 / 2.
  if (1.0 - phi < a) return -(1.0 - phi);
  return -t;
}

// Requester strip of u-extent X with height L - (1 - eta) u.
inline void strip(double L, double X, double eta, double q, double& R, double& B) {
  double k = 1.0 - eta;
  R = L * X - 0.5 * k * X * X;
  B = 0.5 * k * L * X * X - k * k * X * X * X / 3.0 + q * R;
}

}  // namespace detail

// Low branch, 0 <= phi <= phi0.
inline BranchValues low_branch(double phi, const MarketParams& m) {
  detail::require_closed_form(m);
  double phi0 = phi_critical(m);
  if (!(phi >= 0.0 && phi <= phi0))
    throw InvalidArgument("low branch is defined on [0, phi0]");
  const double eta = m.eta, k = 1.0 - eta, q = m.price_base / eta;
  const double a = m.s + q, D = 1.0 - a, L = D - phi;
  BranchValues out;
  double R = 0.0;
  detail::strip(L, D, eta, q, R, out.B);
  out.N = 1.0 - R - detail::alien_area(a, phi);
  // dL/dphi = -1 with X fixed at D.
  out.dB = -0.5 * k * D * D - q * D;
  out.dN = D - detail::d_alien_area(a, phi);
  return out;
}

// High branch, phi >= phi0. Past phi = D the requester region is empty.
inline BranchValues high_branch(double phi, const MarketParams& m) {
  detail::require_closed_form(m);
  double phi0 = phi_critical(m);
  if (!(phi >= 0.0 && phi >= phi0)) throw InvalidArgument("high branch needs phi >= max(0, phi0)");
  const double eta = m.eta, k = 1.0 - eta, q = m.price_base / eta;
  const double a = m.s + q, D = 1.0 - a, L = std::max(D - phi, 0.0);
  BranchValues out;
  double R = L * L / (2.0 * k);
  out.B = (L * L * L / 6.0 + q * L * L / 2.0) / k;
  out.N = 1.0 - R - detail::alien_area(a, phi);
  out.dB = -(L * L / 2.0 + q * L) / k;
  out.dN = L / k - detail::d_alien_area(a, phi);
  return out;
}

inline double lambda_low(double phi, const MarketParams& m) {
  return low_branch(phi, m).lambda(phi);
}

inline double lambda_high(double phi, const MarketParams& m) {
  return high_branch(phi, m).lambda(phi);
}

// phi N(phi) - B(phi) from the partition integrator; valid for any
// single-grade market, including eta in {0, 1} and w != 1.
inline double lambda_quadrature(double phi, const MarketParams& m,
                                const QuadratureSpec& quad = {}) {
  auto pm = measure_partition(BenefitVector::scalar(phi), m, quad, Mode::Unaware);
  return phi * pm.shares.sensor[0] - pm.payments[0];
}

// True when the requester payoff eta (w v - s) - p is nonpositive for all v.
inline bool no_sharing(const MarketParams& m) {
  if (m.eta <= 0.0) return true;
  return m.w - m.s - m.price_base / m.eta <= 0.0;
}

inline bool closed_form_applicable(const MarketParams& m) {
  return is_unaware_normalized(m) && m.w == 1.0 && m.eta > 0.0 && m.eta < 1.0;
}

// Lambda(phi0) via the closed forms when they apply, else by quadrature.
inline RegimeClassification classify_regime(const MarketParams& m) {
  detail::require_unaware(m);
  RegimeClassification out;
  out.phi0 = phi_critical(m);
  if (no_sharing(m)) {
    out.regime = Regime::NoSharing;
    out.lambda_at_phi0 = 0.0;
    return out;
  }
  if (out.phi0 < 0.0) {
    // Only reachable for w != 1; the whole feasible range is the high branch.
    out.regime = Regime::HighBenefit;
    out.lambda_at_phi0 = lambda_quadrature(0.0, m);
    return out;
  }
  out.lambda_at_phi0 =
      closed_form_applicable(m) ? lambda_high(out.phi0, m) : lambda_quadrature(out.phi0, m);
  if (std::abs(out.lambda_at_phi0) <= 1e-14)
    out.regime = Regime::Boundary;
  else
    out.regime = out.lambda_at_phi0 > 0.0 ? Regime::LowBenefit : Regime::HighBenefit;
  return out;
}

// Bisection for a sign change of f on [lo, hi] with f(lo) <= 0 <= f(hi).
inline double bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
  double flo = f(lo), fhi = f(hi);
  if (flo > 0.0 || fhi < 0.0)
    throw BracketError("root is not bracketed on [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  for (int i = 0; i < 400 && hi - lo > tol; ++i) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    double fm = f(mid);
    if (fm == 0.0) return mid;
    (fm < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline UnawareEquilibrium solve_unaware_equilibrium(const MarketParams& m, double tol = 1e-10) {
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be > 0");
  detail::require_unaware(m);
  UnawareEquilibrium out;
  out.regime = classify_regime(m);
  const QuadratureSpec exact{};
  auto quad_residual = [&](double phi) { return lambda_quadrature(phi, m, exact); };

  double phi = 0.0;
  if (out.regime.regime == Regime::NoSharing) {
    // No requester pays anything positive; if the tie-break still admits
    // requesters (eta = 0, p = 0) their payments decide.
    phi = quad_residual(0.0) >= 0.0 ? 0.0
                                    : bisect(quad_residual, 0.0, default_phi_cap(m), tol);
  } else if (out.regime.regime == Regime::Boundary) {
    phi = out.regime.phi0;
  } else if (closed_form_applicable(m)) {
    const double phi0 = out.regime.phi0;
    const double D = 1.0 - m.s - m.price_base / m.eta;
    if (out.regime.regime == Regime::LowBenefit)
      phi = bisect([&](double x) { return lambda_low(x, m); }, 0.0, phi0, tol);
    else
      phi = bisect([&](double x) { return lambda_high(x, m); }, phi0, D, tol);
  } else {
    // eta = 1 or w != 1: at phi_cap no requester survives and N > 0.
    double hi = default_phi_cap(m);
    if (m.eta >= 1.0 && m.w == 1.0) hi = std::max(0.0, 1.0 - m.s - m.price_base);
    phi = quad_residual(0.0) >= 0.0 ? 0.0 : bisect(quad_residual, 0.0, hi, tol);
  }
  out.phi_star = phi;
  out.shares = measure_partition(BenefitVector::scalar(phi), m, exact, Mode::Unaware).shares;
  out.residual = std::abs(quad_residual(phi));
  return out;
}

}  // namespace csrs
