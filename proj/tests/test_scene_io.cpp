#include "sfmcov/error.hpp"
#include "sfmcov/scene_io.hpp"
#include "sfmcov/synthetic.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

using namespace sfmcov;

namespace {

std::string temp_path(const char* name) {
    return std::string("/tmp/sfmcov_io_") + name;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

void check_load_fails(const std::string& text, ErrorKind kind, const std::string& fragment) {
    const std::string path = temp_path("bad.json");
    spit(path, text);
    try {
        load_reconstruction(path);
        FAIL("expected a load error containing '", fragment, "'");
    } catch (const Error& e) {
        CHECK(e.kind() == kind);
        CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
}

}  // namespace

TEST_CASE("scene round-trips bit-exactly") {
    const Reconstruction rec = generate_cube_scene(3, 0.7);
    const std::string path = temp_path("cube.json");
    save_reconstruction(rec, path);
    const Reconstruction back = load_reconstruction(path);

    REQUIRE(back.num_cameras() == rec.num_cameras());
    REQUIRE(back.num_points() == rec.num_points());
    REQUIRE(back.num_observations() == rec.num_observations());
    for (Index i = 0; i < rec.num_cameras(); ++i)
        CHECK(back.cameras[i].params() == rec.cameras[i].params());
    for (Index j = 0; j < rec.num_points(); ++j) CHECK(back.points[j].X == rec.points[j].X);
    for (Index t = 0; t < rec.num_observations(); ++t) {
        CHECK(back.observations[t].cam_index == rec.observations[t].cam_index);
        CHECK(back.observations[t].point_index == rec.observations[t].point_index);
        CHECK(back.observations[t].u == rec.observations[t].u);
        CHECK(back.observations[t].sigma == rec.observations[t].sigma);
    }

    // A second save of the loaded scene must produce identical bytes.
    const std::string path2 = temp_path("cube2.json");
    save_reconstruction(back, path2);
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("identity observation covariance is omitted from the file") {
    const std::string path = temp_path("noiseless.json");
    save_reconstruction(generate_cube_scene(1, 0.0), path);
    CHECK(slurp(path).find("sigma") == std::string::npos);
    const Reconstruction back = load_reconstruction(path);
    for (const Observation& obs : back.observations) CHECK(obs.sigma == Mat2::Identity());

    save_reconstruction(generate_cube_scene(1, 0.5), path);
    CHECK(slurp(path).find("sigma") != std::string::npos);
}

TEST_CASE("load reports malformed input with context") {
    check_load_fails("this is not json", ErrorKind::parse, "load");
    check_load_fails(R"({"points": [], "observations": []})", ErrorKind::parse, "cameras");
    check_load_fails(
        R"({"cameras": [{"C": [0,0,0], "c": 1, "k": 0}], "points": [], "observations": []})",
        ErrorKind::parse, "camera 0");
    check_load_fails(
        R"({"cameras": [{"r": [0,0,0], "C": [0,0,0], "c": "x", "k": 0}],
            "points": [], "observations": []})",
        ErrorKind::parse, "'c'");
    check_load_fails(
        R"({"cameras": [{"r": [0,0], "C": [0,0,0], "c": 1, "k": 0}],
            "points": [], "observations": []})",
        ErrorKind::parse, "'r'");
}

TEST_CASE("load rejects scenes that violate the invariants") {
    // Structurally valid JSON, but camera 0 has too few observations.
    const std::string text = R"({
        "cameras": [{"r": [0,0,0], "C": [0,0,-10], "c": 100, "k": 0},
                    {"r": [0,0,0], "C": [1,0,-10], "c": 100, "k": 0}],
        "points": [[0,0,0],[1,0,0],[0,1,0],[1,1,0],[0,0,1],[1,0,1],[0,1,1],[1,1,1]],
        "observations": [{"cam": 0, "pt": 0, "u": [0,0]},
                         {"cam": 1, "pt": 0, "u": [0,0]}]
    })";
    const std::string path = temp_path("invalid.json");
    spit(path, text);
    CHECK_THROWS_AS(load_reconstruction(path), Error);
}

TEST_CASE("missing and unwritable files raise io errors") {
    try {
        load_reconstruction("/tmp/sfmcov_io_does_not_exist.json");
        FAIL("expected an io error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }
    try {
        save_reconstruction(generate_cube_scene(1, 0.0), "/nonexistent_dir/x.json");
        FAIL("expected an io error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }
}

TEST_CASE("saving an empty reconstruction is rejected") {
    try {
        save_reconstruction(Reconstruction{}, temp_path("empty.json"));
        FAIL("expected an invariant error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invariant);
    }
}
