#pragma once

#include "sfmcov/projection.hpp"
#include "sfmcov/types.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sfmcov {

// Factorization pivots below kPivotRtol times the largest pivot signal a
// singular bordered system (disconnected scene or degraded gauge).
inline constexpr double kPivotRtol = 1e-12;

// Per-block PSD tolerance: eigenvalues below -kPsdTol * trace are reported as
// warnings, never clamped.
inline constexpr double kPsdTol = 1e-9;

struct ConditioningScales {
    VecX s_a;                    // parameter column scales, length 8n+3m
    VecX s_b;                    // border column scales
    std::vector<Index> flagged;  // parameter columns that fell back to scale 1
};

struct Coupling {
    std::int32_t cam_index = 0;
    std::int32_t point_index = 0;
    Mat83 block;  // M[P_i, X_j]
};

// Block-sparse Fisher matrix J^T Sigma_u^-1 J with the gauge border attached.
// The dense bordered matrix is never materialized; schur_reduce eliminates
// the 3x3 point blocks directly into the (8n+b) square camera-plus-border
// matrix.
struct BorderedSystem {
    Index n_cams = 0;
    Index n_pts = 0;
    std::vector<Mat8> cam_blocks;    // M[P_i, P_i]
    std::vector<Mat3> point_blocks;  // M[X_j, X_j]
    std::vector<Coupling> couplings; // observation order
    std::vector<std::vector<std::int32_t>> obs_by_point;
    MatX border;                     // (8n+3m) x b, b = 7 for the gauge border
    bool conditioned = false;

    Index border_cols() const { return border.cols(); }
};

struct CovarianceDiagnostics {
    double scale_min = 0.0;
    double scale_max = 0.0;
    std::vector<Index> flagged_columns;
    double min_pivot = 0.0;
    double max_pivot = 0.0;
    int inertia_positive = 0;
    int inertia_negative = 0;
    int negative_eigenvalue_warnings = 0;
    std::size_t peak_dense_bytes = 0;  // simultaneously live dense buffers
    Index largest_dense_dim = 0;       // largest dense square dimension allocated
};

struct CovarianceResult {
    std::vector<Mat8> camera_cov;
    std::vector<Mat3> point_cov;  // filled when requested
    MatX camera_matrix;           // full 8n x 8n camera covariance, when requested
    CovarianceDiagnostics diagnostics;

    Mat8 cross_block(Index i, Index j) const { return camera_matrix.block<8, 8>(8 * i, 8 * j); }
};

struct CovarianceOptions {
    int threads = 0;  // 0 = SFMCOV_THREADS env or hardware concurrency
    bool point_covariances = false;
    bool camera_cross_covariances = false;
};

// Assembles the Fisher blocks from per-observation 2x2 covariance inverses
// and attaches the border columns. Throws Error(degenerate) with the
// observation index if a covariance is not SPD.
BorderedSystem build_fisher_blocks(const SparseJacobian& jac, const Reconstruction& rec,
                                   MatX border, int threads = 1);

// S_a[col] = 1/sqrt(M[col,col]) (fallback 1, flagged, when the diagonal entry
// is not positive); S_b[l] = 1/|(S_a * border)[:,l]|_2. Call on the unscaled
// system.
ConditioningScales condition_columns(const BorderedSystem& sys);

void apply_conditioning(BorderedSystem& sys, const ConditioningScales& scales);

// Z_p = D_p - B_p^T A_p^-1 B_p where A_p is the block-diagonal point part,
// D_p the camera-plus-border part. Dense (8n+b) square output. Throws
// Error(degenerate) naming the point whose 3x3 block is singular. When
// point_block_inverses is given, the A_p^-1 blocks are written there.
MatX schur_reduce(const BorderedSystem& sys, CovarianceDiagnostics* diag = nullptr,
                  int threads = 1, std::vector<Mat3>* point_block_inverses = nullptr);

// Symmetric indefinite (Bunch-Kaufman) factorization, then a blocked solve
// against the identity; the result is explicitly symmetrized. Pivot extremes
// and inertia are recorded in diag.
MatX invert_schur(MatX z_p, CovarianceDiagnostics& diag);

// Sigma_P[i] = S_i * Z_inv[8i..8i+8) * S_i per camera; PSD violations beyond
// kPsdTol are counted as warnings in the returned diagnostics.
CovarianceResult extract_camera_covariances(const MatX& z_inv, const ConditioningScales& scales,
                                            Index n_cams, CovarianceDiagnostics diag = {});

// Full pipeline: Jacobian, gauge nullspace, Fisher blocks, conditioning,
// point-block Schur reduction, bordered inversion, unscaling. Stage names
// ride on the Error exceptions of the failing step.
CovarianceResult compute_covariance(const Reconstruction& rec,
                                    const CovarianceOptions& options = {});

// Materializes the whole (8n+3m) square parameter covariance through the same
// pipeline without discarding point rows. Guarded to small scenes.
MatX full_covariance(const Reconstruction& rec, Index max_params = 2000);

}  // namespace sfmcov
