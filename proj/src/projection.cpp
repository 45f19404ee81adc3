#include "sfmcov/projection.hpp"

#include "sfmcov/error.hpp"
#include "sfmcov/rotation.hpp"
#include "sfmcov/threading.hpp"

#include <algorithm>
#include <string>

namespace sfmcov {

namespace {

struct ProjectionParts {
    Mat3 R;
    Vec3 v;       // camera-space point
    Vec2 un;      // normalized image coordinates
    double rho;   // |un|^2
};

ProjectionParts project_parts(const Camera& cam, const Vec3& X) {
    ProjectionParts p;
    p.R = rotation_matrix(cam.r);
    p.v = p.R * (X - cam.C);
    if (!(p.v.z() > kDepthEps))
        throw Error(ErrorKind::degenerate, "projection",
                    "point at camera-space depth " + std::to_string(p.v.z()) +
                        " (behind camera or on the principal plane)");
    p.un = p.v.head<2>() / p.v.z();
    p.rho = p.un.squaredNorm();
    return p;
}

}  // namespace

Vec2 project(const Camera& cam, const Vec3& X) {
    const ProjectionParts p = project_parts(cam, X);
    return cam.c * (1.0 + cam.k * p.rho) * p.un;
}

ObservationJacobian observation_jacobian(const Camera& cam, const Vec3& X) {
    const ProjectionParts p = project_parts(cam, X);
    const double d = 1.0 + cam.k * p.rho;

    const Mat2 du_dun = cam.c * (d * Mat2::Identity() + 2.0 * cam.k * p.un * p.un.transpose());
    Mat23 G;
    const double iz = 1.0 / p.v.z();
    G << iz, 0.0, -p.v.x() * iz * iz,
         0.0, iz, -p.v.y() * iz * iz;
    const Mat23 A = du_dun * G;

    ObservationJacobian jac;
    jac.d_X = A * p.R;
    jac.d_C = -jac.d_X;
    jac.d_r = A * rotate_point_derivative(cam.r, X - cam.C);
    jac.d_c = d * p.un;
    jac.d_k = cam.c * p.rho * p.un;
    return jac;
}

double SparseJacobian::max_abs() const {
    double m = 0.0;
    for (const JacobianBlock& b : blocks) {
        m = std::max(m, b.cam_block.cwiseAbs().maxCoeff());
        m = std::max(m, b.point_block.cwiseAbs().maxCoeff());
    }
    return m;
}

MatX SparseJacobian::dense() const {
    MatX J = MatX::Zero(rows(), cols());
    for (std::size_t t = 0; t < blocks.size(); ++t) {
        const JacobianBlock& b = blocks[t];
        J.block<2, 8>(2 * t, cam_col(b.cam_index)) = b.cam_block;
        J.block<2, 3>(2 * t, point_col(b.point_index)) = b.point_block;
    }
    return J;
}

SparseJacobian assemble_jacobian(const Reconstruction& rec, int threads) {
    SparseJacobian jac;
    jac.n_cams = rec.num_cameras();
    jac.n_pts = rec.num_points();
    jac.blocks.resize(rec.observations.size());
    parallel_for(static_cast<std::int64_t>(rec.observations.size()), threads,
                 [&](std::int64_t begin, std::int64_t end) {
                     for (std::int64_t t = begin; t < end; ++t) {
                         const Observation& obs = rec.observations[t];
                         ObservationJacobian der;
                         try {
                             der = observation_jacobian(rec.cameras[obs.cam_index],
                                                        rec.points[obs.point_index].X);
                         } catch (const Error& e) {
                             throw Error(e.kind(), "jacobian",
                                         "observation " + std::to_string(t) + ": " + e.what());
                         }
                         JacobianBlock& b = jac.blocks[t];
                         b.cam_index = obs.cam_index;
                         b.point_index = obs.point_index;
                         b.cam_block << der.d_r, der.d_C, der.d_c, der.d_k;
                         b.point_block = der.d_X;
                     }
                 });
    return jac;
}

VecX residuals(const Reconstruction& rec) {
    VecX r(2 * rec.num_observations());
    for (Index t = 0; t < rec.num_observations(); ++t) {
        const Observation& obs = rec.observations[t];
        Vec2 predicted;
        try {
            predicted = project(rec.cameras[obs.cam_index], rec.points[obs.point_index].X);
        } catch (const Error& e) {
            throw Error(e.kind(), "residuals",
                        "observation " + std::to_string(t) + ": " + e.what());
        }
        r.segment<2>(2 * t) = obs.u - predicted;
    }
    return r;
}

}  // namespace sfmcov
