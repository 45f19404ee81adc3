#pragma once

#include "sfmcov/types.hpp"

#include <cstdint>

namespace sfmcov {

// 6 cameras at the +-axis directions (radius 10) looking at the origin, 15
// points in a [-5,5]^3 cube, fixed visibility pattern of 10 points per camera
// (60 observations, each point seen 3..5 times). Gaussian pixel noise with
// standard deviation noise_px is added to the observations; observation
// covariances are noise_px^2 * I, or the identity when noise_px == 0.
Reconstruction generate_cube_scene(std::uint64_t seed, double noise_px);

// Cameras on a radius-10 ring (small vertical jitter) looking at the origin;
// points uniform in the radius-6 ball. Every point is observed by the
// max(2, round(visibility * n_cams)) angularly nearest cameras, so each
// point's views form a contiguous arc of the ring. Cameras left with fewer
// than 4 observations are topped up with their angularly nearest points.
Reconstruction generate_random_scene(Index n_cams, Index n_pts, double visibility,
                                     std::uint64_t seed, double noise_px);

// Similarity transform of the whole scene: X' = scale * R * X + t, camera
// centers likewise, camera rotations composed so every projection is
// unchanged. Observations are kept as-is.
Reconstruction transform_scene(const Reconstruction& rec, const Mat3& R, const Vec3& t,
                               double scale);

}  // namespace sfmcov
