#include "sfmcov/error.hpp"
#include "sfmcov/synthetic.hpp"
#include "sfmcov/types.hpp"

#include <doctest.h>

#include <string>

using namespace sfmcov;

namespace {

void check_throws(const Reconstruction& rec, const std::string& fragment) {
    try {
        rec.validate();
        FAIL("expected an invariant error containing '", fragment, "'");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invariant);
        CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
}

}  // namespace

TEST_CASE("camera parameter vector is ordered r, C, c, k") {
    Camera cam;
    cam.r = Vec3(1, 2, 3);
    cam.C = Vec3(4, 5, 6);
    cam.c = 7;
    cam.k = 8;
    const Vec8 p = cam.params();
    for (int i = 0; i < 8; ++i) CHECK(p[i] == double(i + 1));
}

TEST_CASE("generated scenes pass validation") {
    CHECK_NOTHROW(generate_cube_scene(1, 0.5).validate());
    CHECK_NOTHROW(generate_random_scene(5, 40, 0.5, 2, 0.5).validate());
}

TEST_CASE("validate rejects each invariant violation") {
    const Reconstruction good = generate_cube_scene(1, 0.5);

    Reconstruction rec = good;
    rec.observations[3].cam_index = 6;
    check_throws(rec, "camera index out of range");

    rec = good;
    rec.observations[3].point_index = -1;
    check_throws(rec, "point index out of range");

    rec = good;
    rec.observations[5] = rec.observations[4];
    check_throws(rec, "duplicate");

    rec = good;
    rec.cameras[2].c = 0.0;
    check_throws(rec, "non-positive focal length");

    rec = good;
    rec.cameras[1].r.x() = std::nan("");
    check_throws(rec, "camera 1 has non-finite");

    rec = good;
    rec.points[7].X.z() = std::numeric_limits<double>::infinity();
    check_throws(rec, "point 7 has non-finite");

    rec = good;
    rec.observations[0].u.y() = std::nan("");
    check_throws(rec, "observation 0 has non-finite");

    rec = good;
    rec.observations[9].sigma(0, 1) = 0.5;  // asymmetric
    check_throws(rec, "not symmetric");

    rec = good;
    rec.observations[9].sigma = -Mat2::Identity();
    check_throws(rec, "not positive definite");

    rec = good;  // starve camera 0 down to 3 observations
    rec.observations.erase(rec.observations.begin(), rec.observations.begin() + 7);
    check_throws(rec, "need at least 4");

    // orphan a point below 2 views
    Reconstruction orphan = good;
    orphan.observations.clear();
    int dropped = 0;
    for (const Observation& obs : good.observations) {
        if (obs.point_index == 0 && dropped + 1 < 4 && obs.cam_index != 0) {
            ++dropped;  // keep one view of point 0
            continue;
        }
        orphan.observations.push_back(obs);
    }
    if (dropped >= 2) check_throws(orphan, "need at least 2");
}

TEST_CASE("observation index lists are ascending and complete") {
    const Reconstruction rec = generate_cube_scene(1, 0.0);
    const ObservationIndex index = build_observation_index(rec);
    REQUIRE(index.by_camera.size() == 6);
    REQUIRE(index.by_point.size() == 15);
    std::size_t total = 0;
    for (Index i = 0; i < rec.num_cameras(); ++i) {
        total += index.by_camera[i].size();
        for (std::size_t a = 0; a < index.by_camera[i].size(); ++a) {
            CHECK(rec.observations[index.by_camera[i][a]].cam_index == i);
            if (a > 0) CHECK(index.by_camera[i][a] > index.by_camera[i][a - 1]);
        }
    }
    CHECK(total == rec.observations.size());
    total = 0;
    for (Index j = 0; j < rec.num_points(); ++j) {
        total += index.by_point[j].size();
        for (std::size_t a = 0; a < index.by_point[j].size(); ++a) {
            CHECK(rec.observations[index.by_point[j][a]].point_index == j);
            if (a > 0) CHECK(index.by_point[j][a] > index.by_point[j][a - 1]);
        }
    }
    CHECK(total == rec.observations.size());
}
