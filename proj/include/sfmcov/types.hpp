#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace sfmcov {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat28 = Eigen::Matrix<double, 2, 8>;
using Mat83 = Eigen::Matrix<double, 8, 3>;
using MatX = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr int kCameraParams = 8;
inline constexpr int kPointParams = 3;
inline constexpr int kGaugeDim = 7;

// One camera: 8 parameters, ordered (r, C, c, k).
struct Camera {
    Vec3 r = Vec3::Zero();  // rotation, axis-angle (radians)
    Vec3 C = Vec3::Zero();  // center (scene units)
    double c = 1.0;         // focal length (pixels)
    double k = 0.0;         // radial distortion coefficient

    Vec8 params() const {
        Vec8 p;
        p << r, C, c, k;
        return p;
    }
};

struct Point3D {
    Vec3 X = Vec3::Zero();
};

struct Observation {
    std::int32_t cam_index = 0;
    std::int32_t point_index = 0;
    Vec2 u = Vec2::Zero();          // measured projection (pixels)
    Mat2 sigma = Mat2::Identity();  // observation covariance (pixels^2)
};

struct Reconstruction {
    std::vector<Camera> cameras;
    std::vector<Point3D> points;
    std::vector<Observation> observations;

    Index num_cameras() const { return static_cast<Index>(cameras.size()); }
    Index num_points() const { return static_cast<Index>(points.size()); }
    Index num_observations() const { return static_cast<Index>(observations.size()); }
    Index num_parameters() const {
        return kCameraParams * num_cameras() + kPointParams * num_points();
    }

    // Throws Error(invariant) naming the offending camera/point/observation.
    void validate() const;
};

// Per-camera and per-point lists of observation indices, each in ascending
// observation order.
struct ObservationIndex {
    std::vector<std::vector<std::int32_t>> by_camera;
    std::vector<std::vector<std::int32_t>> by_point;
};

ObservationIndex build_observation_index(const Reconstruction& rec);

}  // namespace sfmcov
