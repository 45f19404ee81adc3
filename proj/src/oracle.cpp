#include "sfmcov/oracle.hpp"

#include "sfmcov/error.hpp"
#include "sfmcov/projection.hpp"
#include "sfmcov/threading.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace sfmcov {

MatX dense_fisher(const Reconstruction& rec) {
    const SparseJacobian jac = assemble_jacobian(rec, 1);
    const BorderedSystem sys =
        build_fisher_blocks(jac, rec, MatX::Zero(jac.cols(), 0), 1);
    const Index n = sys.n_cams;
    const Index m = sys.n_pts;
    MatX fisher = MatX::Zero(8 * n + 3 * m, 8 * n + 3 * m);
    for (Index i = 0; i < n; ++i)
        fisher.block<8, 8>(8 * i, 8 * i) = sys.cam_blocks[i];
    for (Index j = 0; j < m; ++j)
        fisher.block<3, 3>(8 * n + 3 * j, 8 * n + 3 * j) = sys.point_blocks[j];
    for (const Coupling& c : sys.couplings) {
        fisher.block<8, 3>(8 * c.cam_index, 8 * n + 3 * c.point_index) = c.block;
        fisher.block<3, 8>(8 * n + 3 * c.point_index, 8 * c.cam_index) = c.block.transpose();
    }
    return fisher;
}

OracleResult pseudoinverse_covariance(const Reconstruction& rec, Index max_params) {
    const Index params = rec.num_parameters();
    if (params > max_params)
        throw Error(ErrorKind::size_guard, "oracle",
                    "scene has " + std::to_string(params) + " parameters, guard is " +
                        std::to_string(max_params));
    rec.validate();
    pin_blas_single_thread();

    MatX fisher = dense_fisher(rec);
    const lapack_int n = static_cast<lapack_int>(params);
    MatX u(n, n), vt(n, n);
    VecX s(n);
    const lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'A', n, n, fisher.data(), n,
                                           s.data(), u.data(), n, vt.data(), n);
    if (info != 0)
        throw Error(ErrorKind::degenerate, "oracle",
                    "SVD failed with status " + std::to_string(info));

    // Exactly the seven trailing singular values are dropped; their
    // magnitudes are never consulted.
    VecX s_inv = VecX::Zero(n);
    for (lapack_int i = 0; i + kGaugeDim < n; ++i) s_inv[i] = 1.0 / s[i];

    OracleResult result;
    result.singular_values = s;
    result.gauge_gap = s[n - kGaugeDim - 1] / s[n - kGaugeDim];
    result.sigma_full = vt.transpose() * s_inv.asDiagonal() * u.transpose();
    result.sigma_full = (0.5 * (result.sigma_full + result.sigma_full.transpose())).eval();

    result.cov.camera_cov.resize(rec.num_cameras());
    for (Index i = 0; i < rec.num_cameras(); ++i)
        result.cov.camera_cov[i] = result.sigma_full.block<8, 8>(8 * i, 8 * i);
    result.cov.diagnostics.largest_dense_dim = params;
    result.cov.diagnostics.peak_dense_bytes = 4 * sizeof(double) * std::size_t(n) * n;
    result.cov.diagnostics.scale_min = 1.0;
    result.cov.diagnostics.scale_max = 1.0;
    return result;
}

ErrorReport error_metric(const std::vector<Mat8>& gt, const std::vector<Mat8>& est,
                         const Reconstruction& rec) {
    const Index n = rec.num_cameras();
    if (static_cast<Index>(gt.size()) != n || static_cast<Index>(est.size()) != n)
        throw Error(ErrorKind::dimension, "error-metric",
                    "covariance lists must have one block per camera");

    Vec8 mean_abs = Vec8::Zero();
    for (const Camera& cam : rec.cameras) mean_abs += cam.params().cwiseAbs();
    mean_abs /= static_cast<double>(n);

    ErrorReport report;
    report.normalization = (mean_abs * mean_abs.transpose()).cwiseSqrt();
    for (int p = 0; p < kCameraParams; ++p)
        if (mean_abs[p] == 0.0) {
            report.zero_components.push_back(p);
            for (int q = 0; q < kCameraParams; ++q) {
                report.normalization(p, q) = 1.0;
                report.normalization(q, p) = 1.0;
            }
        }

    report.per_camera.resize(n);
    for (Index i = 0; i < n; ++i) {
        const Mat8 diff = (gt[i] - est[i]).cwiseAbs().cwiseSqrt();
        report.per_camera[i] =
            (diff.array() / report.normalization.array()).sum() / 64.0;
    }

    std::vector<double> sorted = report.per_camera;
    std::sort(sorted.begin(), sorted.end());
    for (const double v : sorted) report.mean += v;
    report.mean /= static_cast<double>(n);
    report.median = (n % 2 == 1) ? sorted[n / 2]
                                 : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return report;
}

ErrorReport error_metric(const CovarianceResult& gt, const CovarianceResult& est,
                         const Reconstruction& rec) {
    return error_metric(gt.camera_cov, est.camera_cov, rec);
}

}  // namespace sfmcov
