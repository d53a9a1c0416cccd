#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tresca/geometry.hpp"

namespace tresca {

// Rule on the reference triangle (0,0)-(1,0)-(0,1); weights sum to 1/2.
struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
  int degree = 0;  // exact for polynomials up to this total degree
};

// Rule on the reference segment [0,1]; weights sum to 1.
struct SegmentRule {
  std::vector<double> points;
  std::vector<double> weights;
  int degree = 0;
};

namespace detail {

inline void orbit1(QuadratureRule& r, double w) {
  r.points.emplace_back(1.0 / 3.0, 1.0 / 3.0);
  r.weights.push_back(0.5 * w);
}

// Three permutations of barycentric (1-2a, a, a).
inline void orbit3(QuadratureRule& r, double a, double w) {
  r.points.emplace_back(a, a);
  r.points.emplace_back(1.0 - 2.0 * a, a);
  r.points.emplace_back(a, 1.0 - 2.0 * a);
  for (int i = 0; i < 3; ++i) r.weights.push_back(0.5 * w);
}

// Six permutations of barycentric (1-a-b, a, b).
inline void orbit6(QuadratureRule& r, double a, double b, double w) {
  const double c = 1.0 - a - b;
  r.points.emplace_back(a, b);
  r.points.emplace_back(b, a);
  r.points.emplace_back(a, c);
  r.points.emplace_back(c, a);
  r.points.emplace_back(b, c);
  r.points.emplace_back(c, b);
  for (int i = 0; i < 6; ++i) r.weights.push_back(0.5 * w);
}

}  // namespace detail

// Symmetric positive-weight rules (Dunavant) selected by requested degree.
inline QuadratureRule interior_quadrature(int degree) {
  QuadratureRule r;
  if (degree <= 1) {
    detail::orbit1(r, 1.0);
    r.degree = 1;
  } else if (degree == 2) {
    detail::orbit3(r, 1.0 / 6.0, 1.0 / 3.0);
    r.degree = 2;
  } else if (degree <= 4) {
    detail::orbit3(r, 0.445948490915965, 0.223381589678011);
    detail::orbit3(r, 0.091576213509771, 0.109951743655322);
    r.degree = 4;
  } else if (degree == 5) {
    detail::orbit1(r, 0.225);
    detail::orbit3(r, 0.470142064105115, 0.132394152788506);
    detail::orbit3(r, 0.101286507323456, 0.125939180544827);
    r.degree = 5;
  } else if (degree == 6) {
    detail::orbit3(r, 0.249286745170910, 0.116786275726379);
    detail::orbit3(r, 0.063089014491502, 0.050844906370207);
    detail::orbit6(r, 0.310352451033785, 0.053145049844816, 0.082851075618374);
    r.degree = 6;
  } else {
    throw std::invalid_argument("interior_quadrature: unsupported degree " +
                                std::to_string(degree));
  }
  return r;
}

// Gauss-Legendre on [0,1].
inline SegmentRule facet_quadrature(int degree) {
  SegmentRule r;
  if (degree <= 1) {
    r.points = {0.5};
    r.weights = {1.0};
    r.degree = 1;
  } else if (degree <= 3) {
    const double d = 0.5 / std::sqrt(3.0);
    r.points = {0.5 - d, 0.5 + d};
    r.weights = {0.5, 0.5};
    r.degree = 3;
  } else if (degree <= 5) {
    const double d = 0.5 * std::sqrt(3.0 / 5.0);
    r.points = {0.5 - d, 0.5, 0.5 + d};
    r.weights = {5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0};
    r.degree = 5;
  } else if (degree <= 6) {
    const double x1 = 0.3399810435848563, x2 = 0.8611363115940526;
    const double w1 = 0.6521451548625461, w2 = 0.3478548451374538;
    r.points = {0.5 * (1.0 - x2), 0.5 * (1.0 - x1), 0.5 * (1.0 + x1),
                0.5 * (1.0 + x2)};
    r.weights = {0.5 * w2, 0.5 * w1, 0.5 * w1, 0.5 * w2};
    r.degree = 7;
  } else {
    throw std::invalid_argument("facet_quadrature: unsupported degree " +
                                std::to_string(degree));
  }
  return r;
}

}  // namespace tresca
