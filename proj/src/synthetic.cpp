#include "sfmcov/synthetic.hpp"

#include "sfmcov/error.hpp"
#include "sfmcov/projection.hpp"
#include "sfmcov/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>

namespace sfmcov {

namespace {

// World-to-camera rotation with the optical axis pointing from C at target.
Vec3 look_at(const Vec3& C, const Vec3& target) {
    const Vec3 z = (target - C).normalized();
    const Vec3 up = std::abs(z.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(0, 1, 0);
    const Vec3 x = up.cross(z).normalized();
    const Vec3 y = z.cross(x);
    Mat3 R;
    R.row(0) = x;
    R.row(1) = y;
    R.row(2) = z;
    return rotation_log(R);
}

void add_noise(Reconstruction& rec, double noise_px, std::mt19937_64& rng) {
    if (noise_px > 0.0) {
        std::normal_distribution<double> gauss(0.0, noise_px);
        for (Observation& obs : rec.observations) {
            obs.u.x() += gauss(rng);
            obs.u.y() += gauss(rng);
            obs.sigma = noise_px * noise_px * Mat2::Identity();
        }
    }
    // noise_px == 0 keeps the default identity covariances; a zero matrix
    // would not be positive definite.
}

double angular_distance(double a, double b) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double d = std::fmod(std::abs(a - b), two_pi);
    return std::min(d, two_pi - d);
}

}  // namespace

Reconstruction generate_cube_scene(std::uint64_t seed, double noise_px) {
    Reconstruction rec;
    const Vec3 dirs[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (int i = 0; i < 6; ++i) {
        Camera cam;
        cam.C = 10.0 * dirs[i];
        cam.r = look_at(cam.C, Vec3::Zero());
        cam.c = 100.0 + 5.0 * i;
        cam.k = 0.01 * (i - 2.5) / 2.5;
        rec.cameras.push_back(cam);
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    for (int j = 0; j < 15; ++j) {
        Point3D p;
        p.X = Vec3(coord(rng), coord(rng), coord(rng));
        rec.points.push_back(p);
    }

    for (int i = 0; i < 6; ++i)
        for (int l = 0; l < 10; ++l) {
            Observation obs;
            obs.cam_index = i;
            obs.point_index = (2 * i + l) % 15;
            obs.u = project(rec.cameras[i], rec.points[obs.point_index].X);
            rec.observations.push_back(obs);
        }

    add_noise(rec, noise_px, rng);
    rec.validate();
    return rec;
}

Reconstruction generate_random_scene(Index n_cams, Index n_pts, double visibility,
                                     std::uint64_t seed, double noise_px) {
    if (n_cams < 2)
        throw Error(ErrorKind::invariant, "generate", "need at least 2 cameras");
    if (n_pts < 8)
        throw Error(ErrorKind::invariant, "generate", "need at least 8 points");
    if (!(visibility > 0.0) || visibility > 1.0)
        throw Error(ErrorKind::invariant, "generate", "visibility must be in (0, 1]");

    constexpr double two_pi = 2.0 * std::numbers::pi;
    constexpr double ring_radius = 10.0;
    constexpr double point_radius = 6.0;

    Reconstruction rec;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (Index i = 0; i < n_cams; ++i) {
        const double ang = two_pi * static_cast<double>(i) / static_cast<double>(n_cams);
        Camera cam;
        cam.C = Vec3(ring_radius * std::cos(ang), ring_radius * std::sin(ang), gauss(rng));
        cam.r = look_at(cam.C, Vec3::Zero());
        cam.c = 100.0 * (1.0 + 0.2 * unit(rng));
        cam.k = 0.02 * gauss(rng);
        rec.cameras.push_back(cam);
    }

    std::uniform_real_distribution<double> coord(-point_radius, point_radius);
    for (Index j = 0; j < n_pts; ++j) {
        Vec3 X;
        do {
            X = Vec3(coord(rng), coord(rng), coord(rng));
        } while (X.norm() > point_radius);
        rec.points.push_back({X});
    }

    const int views = static_cast<int>(
        std::clamp<Index>(std::llround(visibility * static_cast<double>(n_cams)), 2, n_cams));
    const double step = two_pi / static_cast<double>(n_cams);
    std::vector<std::set<std::int32_t>> seen(n_cams);
    for (Index j = 0; j < n_pts; ++j) {
        const double ang = std::atan2(rec.points[j].X.y(), rec.points[j].X.x());
        // The views angularly nearest cameras form a contiguous arc; scan a
        // window around the closest index instead of all cameras.
        const Index center = static_cast<Index>(std::llround(ang / step));
        std::vector<std::pair<double, Index>> candidates;
        for (Index d = -views - 1; d <= views + 1; ++d) {
            const Index i = ((center + d) % n_cams + n_cams) % n_cams;
            candidates.emplace_back(angular_distance(ang, step * static_cast<double>(i)), i);
        }
        std::sort(candidates.begin(), candidates.end());
        std::vector<Index> chosen;
        for (const auto& [dist, i] : candidates) {
            if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) chosen.push_back(i);
            if (static_cast<int>(chosen.size()) == views) break;
        }
        std::sort(chosen.begin(), chosen.end());
        for (Index i : chosen) {
            Observation obs;
            obs.cam_index = static_cast<std::int32_t>(i);
            obs.point_index = static_cast<std::int32_t>(j);
            obs.u = project(rec.cameras[i], rec.points[j].X);
            rec.observations.push_back(obs);
            seen[i].insert(obs.point_index);
        }
    }

    // Top up cameras that ended below the 4-observation floor.
    for (Index i = 0; i < n_cams; ++i) {
        if (static_cast<Index>(seen[i].size()) >= 4) continue;
        const double cam_ang = step * static_cast<double>(i);
        std::vector<std::pair<double, Index>> order;
        for (Index j = 0; j < n_pts; ++j) {
            const double ang = std::atan2(rec.points[j].X.y(), rec.points[j].X.x());
            order.emplace_back(angular_distance(ang, cam_ang), j);
        }
        std::sort(order.begin(), order.end());
        for (const auto& [dist, j] : order) {
            if (static_cast<Index>(seen[i].size()) >= 4) break;
            if (seen[i].count(static_cast<std::int32_t>(j))) continue;
            Observation obs;
            obs.cam_index = static_cast<std::int32_t>(i);
            obs.point_index = static_cast<std::int32_t>(j);
            obs.u = project(rec.cameras[i], rec.points[j].X);
            rec.observations.push_back(obs);
            seen[i].insert(obs.point_index);
        }
        if (static_cast<Index>(seen[i].size()) < 4)
            throw Error(ErrorKind::degenerate, "generate",
                        "visibility infeasible: camera " + std::to_string(i) +
                            " cannot reach 4 observations");
    }

    add_noise(rec, noise_px, rng);
    rec.validate();
    return rec;
}

Reconstruction transform_scene(const Reconstruction& rec, const Mat3& R, const Vec3& t,
                               double scale) {
    Reconstruction out = rec;
    for (Camera& cam : out.cameras) {
        cam.r = rotation_log(rotation_matrix(cam.r) * R.transpose());
        cam.C = scale * R * cam.C + t;
    }
    for (Point3D& p : out.points) p.X = scale * R * p.X + t;
    return out;
}

}  // namespace sfmcov
