#include "sfmcov/rotation.hpp"

#include <cmath>

namespace sfmcov {

Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return s;
}

Mat3 rotation_matrix(const Vec3& r) {
    const double theta2 = r.squaredNorm();
    const Mat3 rx = skew(r);
    double a, b;  // sin(t)/t and (1-cos(t))/t^2
    if (theta2 < kRotationTaylorEps * kRotationTaylorEps) {
        a = 1.0 - theta2 / 6.0;
        b = 0.5 - theta2 / 24.0;
    } else {
        const double theta = std::sqrt(theta2);
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / theta2;
    }
    return Mat3::Identity() + a * rx + b * rx * rx;
}

Vec3 rotation_log(const Mat3& R) {
    // Quaternion extraction with the largest-pivot branch; the plain
    // (R - R^T) formula loses the axis as the angle approaches pi.
    double qw, qx, qy, qz;
    const double tr = R.trace();
    if (tr > 0.0) {
        const double s = std::sqrt(tr + 1.0) * 2.0;
        qw = 0.25 * s;
        qx = (R(2, 1) - R(1, 2)) / s;
        qy = (R(0, 2) - R(2, 0)) / s;
        qz = (R(1, 0) - R(0, 1)) / s;
    } else if (R(0, 0) >= R(1, 1) && R(0, 0) >= R(2, 2)) {
        const double s = std::sqrt(std::max(0.0, 1.0 + R(0, 0) - R(1, 1) - R(2, 2))) * 2.0;
        qw = (R(2, 1) - R(1, 2)) / s;
        qx = 0.25 * s;
        qy = (R(0, 1) + R(1, 0)) / s;
        qz = (R(0, 2) + R(2, 0)) / s;
    } else if (R(1, 1) >= R(2, 2)) {
        const double s = std::sqrt(std::max(0.0, 1.0 + R(1, 1) - R(0, 0) - R(2, 2))) * 2.0;
        qw = (R(0, 2) - R(2, 0)) / s;
        qx = (R(0, 1) + R(1, 0)) / s;
        qy = 0.25 * s;
        qz = (R(1, 2) + R(2, 1)) / s;
    } else {
        const double s = std::sqrt(std::max(0.0, 1.0 + R(2, 2) - R(0, 0) - R(1, 1))) * 2.0;
        qw = (R(1, 0) - R(0, 1)) / s;
        qx = (R(0, 2) + R(2, 0)) / s;
        qy = (R(1, 2) + R(2, 1)) / s;
        qz = 0.25 * s;
    }
    Vec3 qv(qx, qy, qz);
    if (qw < 0.0) {
        qw = -qw;
        qv = -qv;
    }
    const double nv = qv.norm();
    if (nv < 1e-12) return 2.0 * qv;
    return (2.0 * std::atan2(nv, qw) / nv) * qv;
}

Mat3 rotate_point_derivative(const Vec3& r, const Vec3& w) {
    const double theta2 = r.squaredNorm();
    if (theta2 < kRotationTaylorEps * kRotationTaylorEps) {
        return -skew(w) - 0.5 * (skew(r.cross(w)) + skew(r) * skew(w));
    }
    const Mat3 R = rotation_matrix(r);
    return (-R * skew(w) * (r * r.transpose() + (R.transpose() - Mat3::Identity()) * skew(r))) / theta2;
}

}  // namespace sfmcov
