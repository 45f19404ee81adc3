#include "sfmcov/covariance.hpp"

#include "sfmcov/error.hpp"
#include "sfmcov/nullspace.hpp"
#include "sfmcov/threading.hpp"

#include <Eigen/Eigenvalues>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace sfmcov {

namespace {

Mat2 inverse_spd_2x2(const Mat2& s, std::int64_t obs_index) {
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    if (!(s(0, 0) > 0.0) || !(det > 0.0))
        throw Error(ErrorKind::degenerate, "fisher",
                    "observation " + std::to_string(obs_index) +
                        " covariance is not positive definite");
    Mat2 inv;
    inv << s(1, 1), -s(0, 1), -s(1, 0), s(0, 0);
    return inv / det;
}

}  // namespace

BorderedSystem build_fisher_blocks(const SparseJacobian& jac, const Reconstruction& rec,
                                   MatX border, int threads) {
    const Index n = jac.n_cams;
    const Index m = jac.n_pts;
    const auto t_count = static_cast<std::int64_t>(jac.blocks.size());
    if (border.rows() != jac.cols())
        throw Error(ErrorKind::dimension, "fisher", "border row count does not match Jacobian");

    BorderedSystem sys;
    sys.n_cams = n;
    sys.n_pts = m;
    sys.border = std::move(border);
    sys.cam_blocks.assign(n, Mat8::Zero());
    sys.point_blocks.assign(m, Mat3::Zero());
    sys.couplings.resize(t_count);

    std::vector<Mat2> weights(t_count);
    parallel_for(t_count, threads, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t t = begin; t < end; ++t)
            weights[t] = inverse_spd_2x2(rec.observations[t].sigma, t);
    });

    const ObservationIndex index = build_observation_index(rec);
    sys.obs_by_point = index.by_point;

    parallel_for(n, threads, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i)
            for (const std::int32_t t : index.by_camera[i]) {
                const Mat28& cb = jac.blocks[t].cam_block;
                sys.cam_blocks[i] += cb.transpose() * weights[t] * cb;
            }
    });
    parallel_for(m, threads, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t j = begin; j < end; ++j)
            for (const std::int32_t t : index.by_point[j]) {
                const Mat23& pb = jac.blocks[t].point_block;
                sys.point_blocks[j] += pb.transpose() * weights[t] * pb;
            }
    });
    parallel_for(t_count, threads, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t t = begin; t < end; ++t) {
            const JacobianBlock& b = jac.blocks[t];
            Coupling& c = sys.couplings[t];
            c.cam_index = b.cam_index;
            c.point_index = b.point_index;
            c.block = b.cam_block.transpose() * weights[t] * b.point_block;
        }
    });
    return sys;
}

ConditioningScales condition_columns(const BorderedSystem& sys) {
    const Index n = sys.n_cams;
    const Index m = sys.n_pts;
    ConditioningScales scales;
    scales.s_a.resize(8 * n + 3 * m);
    for (Index i = 0; i < n; ++i)
        for (int p = 0; p < 8; ++p) {
            const double d = sys.cam_blocks[i](p, p);
            if (d > 0.0) {
                scales.s_a[8 * i + p] = 1.0 / std::sqrt(d);
            } else {
                scales.s_a[8 * i + p] = 1.0;
                scales.flagged.push_back(8 * i + p);
            }
        }
    for (Index j = 0; j < m; ++j)
        for (int p = 0; p < 3; ++p) {
            const double d = sys.point_blocks[j](p, p);
            if (d > 0.0) {
                scales.s_a[8 * n + 3 * j + p] = 1.0 / std::sqrt(d);
            } else {
                scales.s_a[8 * n + 3 * j + p] = 1.0;
                scales.flagged.push_back(8 * n + 3 * j + p);
            }
        }

    scales.s_b.resize(sys.border_cols());
    for (Index l = 0; l < sys.border_cols(); ++l) {
        const double norm = (scales.s_a.array() * sys.border.col(l).array()).matrix().norm();
        scales.s_b[l] = norm > 0.0 ? 1.0 / norm : 1.0;
    }
    return scales;
}

void apply_conditioning(BorderedSystem& sys, const ConditioningScales& scales) {
    const Index n = sys.n_cams;
    for (Index i = 0; i < n; ++i) {
        const auto d = scales.s_a.segment<8>(8 * i);
        sys.cam_blocks[i] = d.asDiagonal() * sys.cam_blocks[i] * d.asDiagonal();
    }
    for (Index j = 0; j < sys.n_pts; ++j) {
        const auto d = scales.s_a.segment<3>(8 * n + 3 * j);
        sys.point_blocks[j] = d.asDiagonal() * sys.point_blocks[j] * d.asDiagonal();
    }
    for (Coupling& c : sys.couplings) {
        const auto dc = scales.s_a.segment<8>(8 * c.cam_index);
        const auto dp = scales.s_a.segment<3>(8 * n + 3 * c.point_index);
        c.block = dc.asDiagonal() * c.block * dp.asDiagonal();
    }
    sys.border = scales.s_a.asDiagonal() * sys.border * scales.s_b.asDiagonal();
    sys.conditioned = true;
}

MatX schur_reduce(const BorderedSystem& sys, CovarianceDiagnostics* diag, int threads,
                  std::vector<Mat3>* point_block_inverses) {
    const Index n = sys.n_cams;
    const Index m = sys.n_pts;
    const Index b = sys.border_cols();
    const Index dim = 8 * n + b;

    std::vector<Mat3> a_inv(m);
    parallel_for(m, threads, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t j = begin; j < end; ++j) {
            Eigen::SelfAdjointEigenSolver<Mat3> eig(sys.point_blocks[j]);
            const Vec3 lam = eig.eigenvalues();
            if (!(lam[0] > 0.0) || lam[0] < kPivotRtol * lam[2])
                throw Error(ErrorKind::degenerate, "schur",
                            "point " + std::to_string(j) + " has a singular 3x3 block");
            a_inv[j] = eig.eigenvectors() * lam.cwiseInverse().asDiagonal() *
                       eig.eigenvectors().transpose();
        }
    });

    MatX z = MatX::Zero(dim, dim);
    if (diag) {
        diag->largest_dense_dim = std::max(diag->largest_dense_dim, dim);
        diag->peak_dense_bytes =
            std::max<std::size_t>(diag->peak_dense_bytes, sizeof(double) * dim * dim);
    }
    for (Index i = 0; i < n; ++i) {
        z.block<8, 8>(8 * i, 8 * i) = sys.cam_blocks[i];
        z.block(8 * i, 8 * n, 8, b) = sys.border.middleRows(8 * i, 8);
    }

    // Fixed point order keeps the accumulation deterministic for any thread
    // count; the per-point work is tiny next to the later factorization.
    std::vector<Mat83> t_blocks;
    for (Index j = 0; j < m; ++j) {
        const auto& obs = sys.obs_by_point[j];
        const auto border_rows = sys.border.middleRows(8 * n + 3 * j, 3);
        t_blocks.resize(obs.size());
        for (std::size_t a = 0; a < obs.size(); ++a)
            t_blocks[a] = sys.couplings[obs[a]].block * a_inv[j];
        for (std::size_t a = 0; a < obs.size(); ++a) {
            const Index ca = sys.couplings[obs[a]].cam_index;
            z.block<8, 8>(8 * ca, 8 * ca) -= t_blocks[a] * sys.couplings[obs[a]].block.transpose();
            for (std::size_t o = 0; o < obs.size(); ++o) {
                const Index cb = sys.couplings[obs[o]].cam_index;
                if (cb > ca)
                    z.block<8, 8>(8 * ca, 8 * cb) -=
                        t_blocks[a] * sys.couplings[obs[o]].block.transpose();
            }
            z.block(8 * ca, 8 * n, 8, b) -= t_blocks[a] * border_rows;
        }
        z.block(8 * n, 8 * n, b, b) -= border_rows.transpose() * (a_inv[j] * border_rows);
    }

    MatX out = z.selfadjointView<Eigen::Upper>();
    if (point_block_inverses) *point_block_inverses = std::move(a_inv);
    return out;
}

MatX invert_schur(MatX z_p, CovarianceDiagnostics& diag) {
    pin_blas_single_thread();
    const lapack_int n = static_cast<lapack_int>(z_p.rows());
    if (z_p.cols() != n || n < 1)
        throw Error(ErrorKind::dimension, "factorization", "matrix must be square");

    std::vector<lapack_int> ipiv(n);
    lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, z_p.data(), n, ipiv.data());
    if (info < 0)
        throw Error(ErrorKind::degenerate, "factorization",
                    "factorization argument error " + std::to_string(info));
    if (info > 0)
        throw Error(ErrorKind::degenerate, "factorization",
                    "exactly singular pivot at index " + std::to_string(info) +
                        "; the scene is likely disconnected or its gauge degenerate");

    diag.min_pivot = std::numeric_limits<double>::infinity();
    diag.max_pivot = 0.0;
    diag.inertia_positive = diag.inertia_negative = 0;
    for (lapack_int i = 0; i < n;) {
        if (ipiv[i] > 0) {
            const double d = z_p(i, i);
            diag.min_pivot = std::min(diag.min_pivot, std::abs(d));
            diag.max_pivot = std::max(diag.max_pivot, std::abs(d));
            (d >= 0.0 ? diag.inertia_positive : diag.inertia_negative)++;
            ++i;
        } else {
            const double a = z_p(i, i);
            const double c = z_p(i + 1, i + 1);
            const double bb = z_p(i + 1, i);
            const double mean = 0.5 * (a + c);
            const double disc = std::sqrt(0.25 * (a - c) * (a - c) + bb * bb);
            for (const double lam : {mean + disc, mean - disc}) {
                diag.min_pivot = std::min(diag.min_pivot, std::abs(lam));
                diag.max_pivot = std::max(diag.max_pivot, std::abs(lam));
                (lam >= 0.0 ? diag.inertia_positive : diag.inertia_negative)++;
            }
            i += 2;
        }
    }
    if (!(diag.min_pivot > kPivotRtol * diag.max_pivot))
        throw Error(ErrorKind::degenerate, "factorization",
                    "near-singular pivot (ratio " +
                        std::to_string(diag.min_pivot / diag.max_pivot) +
                        "); the scene is likely disconnected or its gauge degenerate");

    MatX inv = MatX::Identity(n, n);
    diag.peak_dense_bytes = std::max<std::size_t>(diag.peak_dense_bytes,
                                                  2 * sizeof(double) * std::size_t(n) * n);
    info = LAPACKE_dsytrs2(LAPACK_COL_MAJOR, 'L', n, n, z_p.data(), n, ipiv.data(), inv.data(), n);
    if (info != 0)
        throw Error(ErrorKind::degenerate, "factorization",
                    "solve against identity failed with status " + std::to_string(info));

    for (lapack_int col = 0; col < n; ++col)
        for (lapack_int row = col + 1; row < n; ++row) {
            const double v = 0.5 * (inv(row, col) + inv(col, row));
            inv(row, col) = v;
            inv(col, row) = v;
        }
    return inv;
}

CovarianceResult extract_camera_covariances(const MatX& z_inv, const ConditioningScales& scales,
                                            Index n_cams, CovarianceDiagnostics diag) {
    CovarianceResult result;
    result.camera_cov.resize(n_cams);
    for (Index i = 0; i < n_cams; ++i) {
        const auto s = scales.s_a.segment<8>(8 * i);
        result.camera_cov[i] = s.asDiagonal() * z_inv.block<8, 8>(8 * i, 8 * i) * s.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Mat8> eig(result.camera_cov[i]);
        if (eig.eigenvalues()[0] < -kPsdTol * result.camera_cov[i].trace())
            ++diag.negative_eigenvalue_warnings;
    }
    if (!scales.s_a.size()) {
        diag.scale_min = diag.scale_max = 1.0;
    } else {
        diag.scale_min = scales.s_a.minCoeff();
        diag.scale_max = scales.s_a.maxCoeff();
    }
    diag.flagged_columns = scales.flagged;
    result.diagnostics = std::move(diag);
    return result;
}

namespace {

// Point covariance blocks: Sigma_X[j] = S_j (A_j^-1 + W Z_inv W^T) S_j with
// W = A_j^-1 B_j gathered over the point's cameras and the border.
void extract_point_covariances(const BorderedSystem& sys, const std::vector<Mat3>& a_inv,
                               const MatX& z_inv, const ConditioningScales& scales,
                               CovarianceResult& result, int threads) {
    const Index n = sys.n_cams;
    const Index b = sys.border_cols();
    result.point_cov.resize(sys.n_pts);
    parallel_for(sys.n_pts, threads, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t j = begin; j < end; ++j) {
            const auto& obs = sys.obs_by_point[j];
            const Index w = static_cast<Index>(obs.size());
            const Index cols = 8 * w + b;
            MatX wj(3, cols);
            for (Index a = 0; a < w; ++a)
                wj.middleCols<8>(8 * a) =
                    a_inv[j] * sys.couplings[obs[a]].block.transpose();
            wj.rightCols(b) = a_inv[j] * sys.border.middleRows(8 * n + 3 * j, 3);

            MatX z_sub(cols, cols);
            for (Index a = 0; a < w; ++a) {
                const Index ca = sys.couplings[obs[a]].cam_index;
                for (Index o = 0; o < w; ++o) {
                    const Index cb = sys.couplings[obs[o]].cam_index;
                    z_sub.block<8, 8>(8 * a, 8 * o) = z_inv.block<8, 8>(8 * ca, 8 * cb);
                }
                z_sub.block(8 * a, 8 * w, 8, b) = z_inv.block(8 * ca, 8 * n, 8, b);
                z_sub.block(8 * w, 8 * a, b, 8) = z_inv.block(8 * n, 8 * ca, b, 8);
            }
            z_sub.bottomRightCorner(b, b) = z_inv.bottomRightCorner(b, b);

            const Mat3 cov = a_inv[j] + wj * z_sub * wj.transpose();
            const auto s = scales.s_a.segment<3>(8 * n + 3 * j);
            result.point_cov[j] = s.asDiagonal() * cov * s.asDiagonal();
        }
    });
}

}  // namespace

CovarianceResult compute_covariance(const Reconstruction& rec, const CovarianceOptions& options) {
    rec.validate();
    const int threads = resolve_threads(options.threads);

    const SparseJacobian jac = assemble_jacobian(rec, threads);
    MatX h = gauge_nullspace(jac, rec);
    BorderedSystem sys = build_fisher_blocks(jac, rec, std::move(h), threads);

    const ConditioningScales scales = condition_columns(sys);
    apply_conditioning(sys, scales);

    CovarianceDiagnostics diag;
    std::vector<Mat3> a_inv;
    MatX z_p = schur_reduce(sys, &diag, threads,
                            options.point_covariances ? &a_inv : nullptr);
    const MatX z_inv = invert_schur(std::move(z_p), diag);

    CovarianceResult result =
        extract_camera_covariances(z_inv, scales, sys.n_cams, std::move(diag));
    if (options.point_covariances)
        extract_point_covariances(sys, a_inv, z_inv, scales, result, threads);
    if (options.camera_cross_covariances) {
        const Index nc = 8 * sys.n_cams;
        const auto sp = scales.s_a.head(nc);
        result.camera_matrix = sp.asDiagonal() * z_inv.topLeftCorner(nc, nc) * sp.asDiagonal();
    }
    return result;
}

MatX full_covariance(const Reconstruction& rec, Index max_params) {
    if (rec.num_parameters() > max_params)
        throw Error(ErrorKind::size_guard, "full-covariance",
                    "scene has " + std::to_string(rec.num_parameters()) +
                        " parameters, guard is " + std::to_string(max_params));
    rec.validate();

    const SparseJacobian jac = assemble_jacobian(rec, 1);
    MatX h = gauge_nullspace(jac, rec);
    BorderedSystem sys = build_fisher_blocks(jac, rec, std::move(h), 1);
    const ConditioningScales scales = condition_columns(sys);
    apply_conditioning(sys, scales);

    CovarianceDiagnostics diag;
    std::vector<Mat3> a_inv;
    MatX z_p = schur_reduce(sys, &diag, 1, &a_inv);
    const MatX z_inv = invert_schur(std::move(z_p), diag);

    const Index n = sys.n_cams;
    const Index m = sys.n_pts;
    const Index b = sys.border_cols();
    const Index dim = 8 * n + b;

    MatX r = MatX::Zero(3 * m, dim);
    for (Index j = 0; j < m; ++j) {
        for (const std::int32_t t : sys.obs_by_point[j]) {
            const Coupling& c = sys.couplings[t];
            r.block<3, 8>(3 * j, 8 * c.cam_index) = a_inv[j] * c.block.transpose();
        }
        r.block(3 * j, 8 * n, 3, b) = a_inv[j] * sys.border.middleRows(8 * n + 3 * j, 3);
    }
    const MatX g = r * z_inv;

    const Index params = 8 * n + 3 * m;
    MatX sigma(params, params);
    sigma.topLeftCorner(8 * n, 8 * n) = z_inv.topLeftCorner(8 * n, 8 * n);
    sigma.bottomLeftCorner(3 * m, 8 * n) = -g.leftCols(8 * n);
    sigma.topRightCorner(8 * n, 3 * m) = sigma.bottomLeftCorner(3 * m, 8 * n).transpose();
    MatX pp = g * r.transpose();
    for (Index j = 0; j < m; ++j) pp.block<3, 3>(3 * j, 3 * j) += a_inv[j];
    sigma.bottomRightCorner(3 * m, 3 * m) = pp;

    sigma = scales.s_a.asDiagonal() * sigma * scales.s_a.asDiagonal();
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    return sigma;
}

}  // namespace sfmcov
