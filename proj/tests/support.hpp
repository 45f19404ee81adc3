#pragma once

#include "sfmcov/projection.hpp"
#include "sfmcov/rotation.hpp"
#include "sfmcov/synthetic.hpp"
#include "sfmcov/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace test_support {

using namespace sfmcov;

using Mat211 = Eigen::Matrix<double, 2, 11>;

// Central finite differences of project() over the 11 parameters of one
// (camera, point) pair, relative step 1e-6.
inline Mat211 numeric_jacobian(const Camera& cam, const Vec3& X) {
    Eigen::Matrix<double, 11, 1> x;
    x << cam.r, cam.C, cam.c, cam.k, X;
    const auto eval = [](const Eigen::Matrix<double, 11, 1>& y) {
        Camera c2;
        c2.r = y.segment<3>(0);
        c2.C = y.segment<3>(3);
        c2.c = y[6];
        c2.k = y[7];
        return project(c2, y.segment<3>(8));
    };
    Mat211 out;
    for (int p = 0; p < 11; ++p) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[p]));
        Eigen::Matrix<double, 11, 1> lo = x, hi = x;
        lo[p] -= h;
        hi[p] += h;
        out.col(p) = (eval(hi) - eval(lo)) / (2.0 * h);
    }
    return out;
}

inline Mat211 analytic_jacobian(const Camera& cam, const Vec3& X) {
    const ObservationJacobian j = observation_jacobian(cam, X);
    Mat211 out;
    out << j.d_r, j.d_C, j.d_c, j.d_k, j.d_X;
    return out;
}

// Random (camera, point) pair with healthy depth and bounded normalized
// coordinates, resampled until well-posed.
inline std::pair<Camera, Vec3> random_pair(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> focal(50.0, 200.0);
    std::uniform_real_distribution<double> distortion(-0.3, 0.3);
    for (;;) {
        Camera cam;
        const Vec3 axis(unit(rng), unit(rng), unit(rng));
        if (axis.norm() < 1e-3) continue;
        cam.r = axis.normalized() * std::abs(unit(rng)) * 3.0;
        cam.C = Vec3(unit(rng), unit(rng), unit(rng)) * 5.0;
        cam.c = focal(rng);
        cam.k = distortion(rng);
        const Vec3 X = Vec3(unit(rng), unit(rng), unit(rng)) * 5.0;
        const Vec3 v = rotation_matrix(cam.r) * (X - cam.C);
        if (v.z() < 0.5) continue;
        if (std::abs(v.x() / v.z()) > 1.5 || std::abs(v.y() / v.z()) > 1.5) continue;
        return {cam, X};
    }
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vec3 axis(unit(rng), unit(rng), unit(rng));
    while (axis.norm() < 1e-3) axis = Vec3(unit(rng), unit(rng), unit(rng));
    return rotation_matrix(axis.normalized() * std::abs(unit(rng)) * 3.0);
}

// Count-based pseudoinverse through a symmetric eigendecomposition: the
// seven eigenvalues of smallest magnitude are dropped. Algorithmically
// independent of the SVD-based reference path.
inline MatX eig_pseudoinverse(const MatX& m, int null_count = kGaugeDim) {
    Eigen::SelfAdjointEigenSolver<MatX> eig(m);
    const VecX lam = eig.eigenvalues();
    std::vector<Index> order(lam.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(),
              [&](Index a, Index b) { return std::abs(lam[a]) < std::abs(lam[b]); });
    VecX inv = VecX::Zero(lam.size());
    for (std::size_t i = null_count; i < order.size(); ++i)
        inv[order[i]] = 1.0 / lam[order[i]];
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

inline double rel_diff(const MatX& a, const MatX& b) {
    const double scale = b.norm();
    return scale > 0.0 ? (a - b).norm() / scale : (a - b).norm();
}

// Two rigid cube scenes far apart, sharing no observations: passes the scene
// invariants but has a 14-dimensional gauge, twice the border width.
inline Reconstruction disconnected_scene(std::uint64_t seed, double noise_px) {
    const Reconstruction a = generate_cube_scene(seed, noise_px);
    Reconstruction out = a;
    const Reconstruction b =
        transform_scene(generate_cube_scene(seed + 1, noise_px), Mat3::Identity(),
                        Vec3(100.0, 0.0, 0.0), 1.0);
    const auto cam_offset = static_cast<std::int32_t>(a.num_cameras());
    const auto pt_offset = static_cast<std::int32_t>(a.num_points());
    out.cameras.insert(out.cameras.end(), b.cameras.begin(), b.cameras.end());
    out.points.insert(out.points.end(), b.points.begin(), b.points.end());
    for (Observation obs : b.observations) {
        obs.cam_index += cam_offset;
        obs.point_index += pt_offset;
        out.observations.push_back(obs);
    }
    return out;
}

}  // namespace test_support
