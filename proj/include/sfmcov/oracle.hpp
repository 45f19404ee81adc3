#pragma once

#include "sfmcov/covariance.hpp"
#include "sfmcov/types.hpp"

#include <vector>

namespace sfmcov {

// Dense SVD is quadratic in memory and cubic in time; refuse anything that
// would not finish at desk scale.
inline constexpr Index kOracleMaxParams = 2000;

struct OracleResult {
    CovarianceResult cov;    // per-camera blocks cut from sigma_full
    MatX sigma_full;         // (8n+3m) square covariance
    VecX singular_values;    // descending
    double gauge_gap = 0.0;  // sigma[N-8] / sigma[N-7]
};

struct ErrorReport {
    std::vector<double> per_camera;
    Mat8 normalization;               // O, strictly positive after fallback
    double mean = 0.0;
    double median = 0.0;
    std::vector<int> zero_components; // parameter slots whose mean |value| was 0
};

// Fisher matrix J^T Sigma_u^-1 J materialized densely from its sparse blocks.
MatX dense_fisher(const Reconstruction& rec);

// Reference covariance: dense SVD of the Fisher matrix with exactly the
// seven smallest singular values zeroed (count-based, never by threshold),
// then reassembled as V S^+ U^T.
OracleResult pseudoinverse_covariance(const Reconstruction& rec,
                                      Index max_params = kOracleMaxParams);

// Per camera: mean over the 64 block entries of sqrt(|gt - est|) divided
// element-wise by O = sqrt(e e^T), where e is the component-wise mean of
// absolute camera parameters over the whole scene. Zero entries of e fall
// back to 1 and are listed in zero_components.
ErrorReport error_metric(const std::vector<Mat8>& gt, const std::vector<Mat8>& est,
                         const Reconstruction& rec);
ErrorReport error_metric(const CovarianceResult& gt, const CovarianceResult& est,
                         const Reconstruction& rec);

}  // namespace sfmcov
