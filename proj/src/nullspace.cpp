#include "sfmcov/nullspace.hpp"

#include "sfmcov/error.hpp"
#include "sfmcov/rotation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <string>
#include <vector>

namespace sfmcov {

MatX fixed_nullspace_blocks(const Reconstruction& rec) {
    const Index n = rec.num_cameras();
    const Index m = rec.num_points();
    MatX h = MatX::Zero(rec.num_parameters(), kGaugeDim);
    for (Index i = 0; i < n; ++i) {
        const Vec3& C = rec.cameras[i].C;
        h.block<3, 3>(8 * i + 3, 0) = Mat3::Identity();
        h.block<3, 3>(8 * i + 3, 3) = skew(C);
        h.block<3, 1>(8 * i + 3, 6) = C;
    }
    for (Index j = 0; j < m; ++j) {
        const Vec3& X = rec.points[j].X;
        h.block<3, 3>(8 * n + 3 * j, 0) = Mat3::Identity();
        h.block<3, 3>(8 * n + 3 * j, 3) = skew(X);
        h.block<3, 1>(8 * n + 3 * j, 6) = X;
    }
    return h;
}

void solve_rotation_blocks(const SparseJacobian& jac, MatX& h) {
    const Index n = jac.n_cams;
    if (h.rows() != jac.cols() || h.cols() != kGaugeDim)
        throw Error(ErrorKind::dimension, "nullspace", "nullspace shape does not match Jacobian");

    std::vector<Mat3> normal(n, Mat3::Zero());
    std::vector<Mat3> rhs(n, Mat3::Zero());
    for (const JacobianBlock& b : jac.blocks) {
        const Mat23 d_r = b.cam_block.leftCols<3>();
        const Mat23 d_C = b.cam_block.middleCols<3>(3);
        const Mat23& d_X = b.point_block;
        const Mat3 hc = h.block<3, 3>(8 * b.cam_index + 3, 3);          // [C_i]x
        const Mat3 hx = h.block<3, 3>(8 * n + 3 * b.point_index, 3);    // [X_j]x
        const Mat23 target = -(d_C * hc + d_X * hx);
        normal[b.cam_index] += d_r.transpose() * d_r;
        rhs[b.cam_index] += d_r.transpose() * target;
    }

    for (Index i = 0; i < n; ++i) {
        Eigen::SelfAdjointEigenSolver<Mat3> eig(normal[i]);
        const Vec3 lam = eig.eigenvalues();
        if (!(lam[0] > 0.0) || lam[0] < kRotationCondTol * lam[2])
            throw Error(ErrorKind::degenerate, "nullspace",
                        "camera " + std::to_string(i) +
                            " has a rank-deficient rotation system");
        const Mat3 inv =
            eig.eigenvectors() * lam.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
        h.block<3, 3>(8 * i, 3) = inv * rhs[i];
    }
}

MatX gauge_nullspace(const SparseJacobian& jac, const Reconstruction& rec) {
    MatX h = fixed_nullspace_blocks(rec);
    solve_rotation_blocks(jac, h);
    return h;
}

double nullspace_residual(const SparseJacobian& jac, const MatX& h) {
    if (h.rows() != jac.cols() || h.cols() < 1)
        throw Error(ErrorKind::dimension, "nullspace", "nullspace shape does not match Jacobian");
    const Index n = jac.n_cams;
    double max_jh = 0.0;
    for (const JacobianBlock& b : jac.blocks) {
        const Eigen::Matrix<double, 2, Eigen::Dynamic> row =
            b.cam_block * h.middleRows(8 * b.cam_index, 8) +
            b.point_block * h.middleRows(8 * n + 3 * b.point_index, 3);
        max_jh = std::max(max_jh, row.cwiseAbs().maxCoeff());
    }
    const double denom = jac.max_abs() * h.cwiseAbs().maxCoeff();
    return denom > 0.0 ? max_jh / denom : 0.0;
}

}  // namespace sfmcov
