#pragma once

#include "sfmcov/types.hpp"

namespace sfmcov {

inline constexpr double kRotationTaylorEps = 1e-8;

// [v]x such that skew(v) * y == v.cross(y).
Mat3 skew(const Vec3& v);

// Axis-angle to rotation matrix; series fallback below kRotationTaylorEps
// avoids the 0/0 at r = 0.
Mat3 rotation_matrix(const Vec3& r);

// Inverse of rotation_matrix via quaternion extraction, stable for all angles
// including pi. Returns the representative with angle in [0, pi].
Vec3 rotation_log(const Mat3& R);

// d(R(r) w)/dr, 3x3.
Mat3 rotate_point_derivative(const Vec3& r, const Vec3& w);

}  // namespace sfmcov
