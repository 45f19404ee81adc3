#pragma once

#include "sfmcov/types.hpp"

#include <cstdint>
#include <vector>

namespace sfmcov {

// Projections with camera-space depth at or below this are hard errors;
// propagating uncertainty through an invalid point is meaningless.
inline constexpr double kDepthEps = 1e-9;

// u = c * (1 + k*|un|^2) * un with un = (x/z, y/z) in camera coordinates.
Vec2 project(const Camera& cam, const Vec3& X);

// Analytic partial derivatives of project at (cam, X).
struct ObservationJacobian {
    Mat23 d_r;   // pixels/radian
    Mat23 d_C;   // pixels/scene-unit, equals -d_X
    Vec2 d_c;    // dimensionless
    Vec2 d_k;    // pixels
    Mat23 d_X;   // pixels/scene-unit
};

ObservationJacobian observation_jacobian(const Camera& cam, const Vec3& X);

// Block-sparse Jacobian of all projections w.r.t. the parameter vector
// (P_1..P_n, X_1..X_m). Row pair 2t belongs to observation t; each row pair
// has one 2x8 camera block (columns r, C, c, k) and one 2x3 point block.
struct JacobianBlock {
    std::int32_t cam_index = 0;
    std::int32_t point_index = 0;
    Mat28 cam_block;
    Mat23 point_block;
};

struct SparseJacobian {
    Index n_cams = 0;
    Index n_pts = 0;
    std::vector<JacobianBlock> blocks;  // observation order

    Index rows() const { return 2 * static_cast<Index>(blocks.size()); }
    Index cols() const { return kCameraParams * n_cams + kPointParams * n_pts; }
    Index cam_col(Index i) const { return kCameraParams * i; }
    Index point_col(Index j) const { return kCameraParams * n_cams + kPointParams * j; }

    double max_abs() const;

    // Dense materialization for tests and the dense oracle only.
    MatX dense() const;
};

SparseJacobian assemble_jacobian(const Reconstruction& rec, int threads = 1);

// r_t = u_t - project(...), stacked in observation order.
VecX residuals(const Reconstruction& rec);

}  // namespace sfmcov
