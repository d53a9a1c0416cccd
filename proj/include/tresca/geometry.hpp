#pragma once

#include <Eigen/Dense>

namespace tresca {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

// +90 degree rotation; maps a facet normal to the facet tangent.
inline Vec2 rot90(const Vec2& v) { return Vec2(-v.y(), v.x()); }

}  // namespace tresca
