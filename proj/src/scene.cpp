#include "sfmcov/types.hpp"

#include "sfmcov/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sfmcov {

namespace {

bool finite(const Vec3& v) {
    return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace

void Reconstruction::validate() const {
    const auto n = num_cameras();
    const auto m = num_points();
    for (Index i = 0; i < n; ++i) {
        const Camera& cam = cameras[i];
        if (!finite(cam.r) || !finite(cam.C) || !std::isfinite(cam.c) || !std::isfinite(cam.k))
            throw Error(ErrorKind::invariant, "validate",
                        "camera " + std::to_string(i) + " has non-finite parameters");
        if (!(cam.c > 0.0))
            throw Error(ErrorKind::invariant, "validate",
                        "camera " + std::to_string(i) + " has non-positive focal length");
    }
    for (Index j = 0; j < m; ++j) {
        if (!finite(points[j].X))
            throw Error(ErrorKind::invariant, "validate",
                        "point " + std::to_string(j) + " has non-finite coordinates");
    }

    std::vector<std::int64_t> keys;
    keys.reserve(observations.size());
    std::vector<int> cam_count(n, 0), point_count(m, 0);
    for (std::size_t t = 0; t < observations.size(); ++t) {
        const Observation& obs = observations[t];
        if (obs.cam_index < 0 || obs.cam_index >= n)
            throw Error(ErrorKind::invariant, "validate",
                        "observation " + std::to_string(t) + " camera index out of range");
        if (obs.point_index < 0 || obs.point_index >= m)
            throw Error(ErrorKind::invariant, "validate",
                        "observation " + std::to_string(t) + " point index out of range");
        if (!std::isfinite(obs.u.x()) || !std::isfinite(obs.u.y()) ||
            !obs.sigma.allFinite())
            throw Error(ErrorKind::invariant, "validate",
                        "observation " + std::to_string(t) + " has non-finite values");
        const Mat2& s = obs.sigma;
        const double scale = std::max({std::abs(s(0, 0)), std::abs(s(1, 1)), std::abs(s(0, 1)), 1e-300});
        if (std::abs(s(0, 1) - s(1, 0)) > 1e-12 * scale)
            throw Error(ErrorKind::invariant, "validate",
                        "observation " + std::to_string(t) + " covariance not symmetric");
        if (!(s(0, 0) > 0.0) || !(s.determinant() > 0.0))
            throw Error(ErrorKind::invariant, "validate",
                        "observation " + std::to_string(t) + " covariance not positive definite");
        keys.push_back((static_cast<std::int64_t>(obs.cam_index) << 32) | obs.point_index);
        ++cam_count[obs.cam_index];
        ++point_count[obs.point_index];
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
        throw Error(ErrorKind::invariant, "validate",
                    "duplicate (camera, point) observation pair");
    for (Index i = 0; i < n; ++i)
        if (cam_count[i] < 4)
            throw Error(ErrorKind::invariant, "validate",
                        "camera " + std::to_string(i) + " observes " +
                            std::to_string(cam_count[i]) + " points, need at least 4");
    for (Index j = 0; j < m; ++j)
        if (point_count[j] < 2)
            throw Error(ErrorKind::invariant, "validate",
                        "point " + std::to_string(j) + " is observed by " +
                            std::to_string(point_count[j]) + " cameras, need at least 2");
}

ObservationIndex build_observation_index(const Reconstruction& rec) {
    ObservationIndex index;
    index.by_camera.resize(rec.num_cameras());
    index.by_point.resize(rec.num_points());
    for (std::size_t t = 0; t < rec.observations.size(); ++t) {
        const Observation& obs = rec.observations[t];
        index.by_camera[obs.cam_index].push_back(static_cast<std::int32_t>(t));
        index.by_point[obs.point_index].push_back(static_cast<std::int32_t>(t));
    }
    return index;
}

}  // namespace sfmcov
