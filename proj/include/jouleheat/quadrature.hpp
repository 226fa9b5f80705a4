#ifndef JOULEHEAT_QUADRATURE_HPP
#define JOULEHEAT_QUADRATURE_HPP

#include <array>
#include <vector>

#include "jouleheat/core.hpp"

namespace jouleheat {

/// Quadrature rule on the reference tetrahedron, stored in barycentric
/// coordinates. Weights are normalized to sum to one, so an integral over a
/// physical cell is vol(T) * sum_q w_q f(x_q).
struct TetRule {
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
  int degree = 0;
};

/// Same convention on the reference triangle (for boundary facets).
struct TriRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;
};

/// 4-point rule, exact for polynomials of degree 2.
inline const TetRule& tet_rule_degree2() {
  static const TetRule rule = [] {
    TetRule r;
    const double a = 0.5854101966249685;  // (5 + 3*sqrt(5)) / 20
    const double b = 0.1381966011250105;  // (5 - sqrt(5)) / 20
    for (int i = 0; i < 4; ++i) {
      std::array<double, 4> p{b, b, b, b};
      p[i] = a;
      r.points.push_back(p);
      r.weights.push_back(0.25);
    }
    r.degree = 2;
    return r;
  }();
  return rule;
}

/// 14-point rule used for the non-polynomial right-hand sides. Declared
/// degree 4; the exactness test checks the declaration.
inline const TetRule& tet_rule_degree4() {
  static const TetRule rule = [] {
    TetRule r;
    auto add_orbit4 = [&](double apex, double base, double w) {
      for (int i = 0; i < 4; ++i) {
        std::array<double, 4> p{base, base, base, base};
        p[i] = apex;
        r.points.push_back(p);
        r.weights.push_back(w);
      }
    };
    add_orbit4(0.0673422422100983, 0.3108859192633005, 0.1126879257180162);
    add_orbit4(0.7217942490673264, 0.0927352503108912, 0.0734930431163619);
    // 6-point orbit: two coordinates a, two coordinates 1/2 - a.
    const double a = 0.0455037041256497;
    const double b = 0.5 - a;
    const double w = 0.0425460207770812;
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        std::array<double, 4> p{b, b, b, b};
        p[i] = a;
        p[j] = a;
        r.points.push_back(p);
        r.weights.push_back(w);
      }
    }
    r.degree = 4;
    return r;
  }();
  return rule;
}

/// 3-point triangle rule, exact for degree 2.
inline const TriRule& tri_rule_degree2() {
  static const TriRule rule = [] {
    TriRule r;
    const double a = 2.0 / 3.0;
    const double b = 1.0 / 6.0;
    for (int i = 0; i < 3; ++i) {
      std::array<double, 3> p{b, b, b};
      p[i] = a;
      r.points.push_back(p);
      r.weights.push_back(1.0 / 3.0);
    }
    r.degree = 2;
    return r;
  }();
  return rule;
}

/// 6-point triangle rule, exact for degree 4.
inline const TriRule& tri_rule_degree4() {
  static const TriRule rule = [] {
    TriRule r;
    auto add_orbit = [&](double apex, double base, double w) {
      for (int i = 0; i < 3; ++i) {
        std::array<double, 3> p{base, base, base};
        p[i] = apex;
        r.points.push_back(p);
        r.weights.push_back(w);
      }
    };
    add_orbit(0.1081030181680702, 0.4459484909159649, 0.2233815896780115);
    add_orbit(0.8168475729804585, 0.0915762135097707, 0.1099517436553219);
    r.degree = 4;
    return r;
  }();
  return rule;
}

/// Exact value of the monomial x^a y^b z^c over the reference tetrahedron
/// with vertices (0, e1, e2, e3): a! b! c! / (a+b+c+3)!.
inline double reference_tet_monomial(int a, int b, int c) {
  auto fact = [](int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  return fact(a) * fact(b) * fact(c) / fact(a + b + c + 3);
}

/// Exact value of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
inline double reference_tri_monomial(int a, int b) {
  auto fact = [](int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  return fact(a) * fact(b) / fact(a + b + 2);
}

}  // namespace jouleheat

#endif
