#pragma once

// Convex polygon clipping in the (v, c) type plane.
//
// Every payoff in the game is affine in (v, c) once the quality grade is
// fixed, so each best-response region is the unit square intersected with a
// finite set of half-planes. Clipping gives exact areas and first moments.

#include <cmath>
#include <vector>

namespace csrs::geometry {

struct Point {
  double v = 0.0;
  double c = 0.0;
};

using Polygon = std::vector<Point>;

// a0 + av * v + ac * c
struct Affine {
  double a0 = 0.0;
  double av = 0.0;
  double ac = 0.0;

  double operator()(double v, double c) const { return a0 + av * v + ac * c; }
  double operator()(const Point& p) const { return (*this)(p.v, p.c); }

  Affine operator-(const Affine& o) const { return {a0 - o.a0, av - o.av, ac - o.ac}; }

  bool is_zero() const { return a0 == 0.0 && av == 0.0 && ac == 0.0; }
};

// Counter-clockwise unit square.
inline Polygon unit_square() { return {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}}; }

// Keeps the part of `poly` where h >= 0 (Sutherland-Hodgman, single edge).
inline Polygon clip(const Polygon& poly, const Affine& h) {
  Polygon out;
  if (poly.empty()) return out;
  out.reserve(poly.size() + 1);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % poly.size()];
    double fp = h(p);
    double fq = h(q);
    if (fp >= 0.0) out.push_back(p);
    if ((fp >= 0.0) != (fq >= 0.0)) {
      double t = fp / (fp - fq);
      out.push_back({p.v + t * (q.v - p.v), p.c + t * (q.c - p.c)});
    }
  }
  if (out.size() < 3) out.clear();
  return out;
}

// Area and first moments (integrals of v and c) of a simple polygon.
struct Moments {
  double area = 0.0;
  double mv = 0.0;
  double mc = 0.0;

  Moments& operator+=(const Moments& o) {
    area += o.area;
    mv += o.mv;
    mc += o.mc;
    return *this;
  }

  // Integral of an affine field over the region.
  double integrate(const Affine& f) const { return f.a0 * area + f.av * mv + f.ac * mc; }
};

inline Moments moments(const Polygon& poly) {
  Moments m;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % poly.size()];
    double cross = p.v * q.c - q.v * p.c;
    m.area += cross;
    m.mv += (p.v + q.v) * cross;
    m.mc += (p.c + q.c) * cross;
  }
  m.area *= 0.5;
  m.mv /= 6.0;
  m.mc /= 6.0;
  // Degenerate slivers can come out with tiny negative area.
  if (m.area < 0.0) m = {};
  return m;
}

}  // namespace csrs::geometry
