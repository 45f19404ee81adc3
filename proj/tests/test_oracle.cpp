#include "sfmcov/covariance.hpp"
#include "sfmcov/error.hpp"
#include "sfmcov/nullspace.hpp"
#include "sfmcov/oracle.hpp"
#include "sfmcov/projection.hpp"
#include "sfmcov/synthetic.hpp"

#include <doctest.h>

#include "support.hpp"

#include <algorithm>
#include <string>

using namespace sfmcov;

TEST_CASE("the dense Fisher matrix matches the raw product") {
    const Reconstruction rec = generate_cube_scene(1, 0.5);
    const SparseJacobian jac = assemble_jacobian(rec);
    const MatX j = jac.dense();
    MatX w = MatX::Zero(j.rows(), j.rows());
    for (Index t = 0; t < rec.num_observations(); ++t)
        w.block<2, 2>(2 * t, 2 * t) = rec.observations[t].sigma.inverse();
    CHECK(test_support::rel_diff(dense_fisher(rec), j.transpose() * w * j) < 1e-13);
}

TEST_CASE("a well-posed scene has a wide gauge gap") {
    for (const double noise : {0.0, 0.5}) {
        const OracleResult oracle = pseudoinverse_covariance(generate_cube_scene(2, noise));
        const Index n = oracle.singular_values.size();
        REQUIRE(n == 93);
        CHECK(std::is_sorted(oracle.singular_values.data(), oracle.singular_values.data() + n,
                             [](double a, double b) { return a > b; }));
        CHECK(oracle.gauge_gap > 1e6);
    }
}

TEST_CASE("the reference covariance satisfies the Moore-Penrose identities") {
    const Reconstruction rec = generate_cube_scene(3, 0.5);
    const MatX m = dense_fisher(rec);
    const OracleResult oracle = pseudoinverse_covariance(rec);
    const MatX& sigma = oracle.sigma_full;

    CHECK(test_support::rel_diff(m * sigma * m, m) < 1e-6);
    CHECK(test_support::rel_diff(sigma * m * sigma, sigma) < 1e-6);
    CHECK((sigma - sigma.transpose()).cwiseAbs().maxCoeff() == 0.0);

    // trace of the projector M * Sigma equals the rank
    const double rank = (m * sigma).trace();
    CHECK(rank == doctest::Approx(static_cast<double>(rec.num_parameters() - 7)).epsilon(1e-9));
}

TEST_CASE("the covariance annihilates the gauge directions") {
    const Reconstruction rec = generate_cube_scene(4, 0.5);
    const OracleResult oracle = pseudoinverse_covariance(rec);
    const SparseJacobian jac = assemble_jacobian(rec);
    const MatX h = gauge_nullspace(jac, rec);
    const double resid = (h.transpose() * oracle.sigma_full).cwiseAbs().maxCoeff() /
                         (h.cwiseAbs().maxCoeff() * oracle.sigma_full.cwiseAbs().maxCoeff());
    CHECK(resid < 1e-8);
}

TEST_CASE("an independent eigendecomposition pseudoinverse agrees") {
    const Reconstruction rec = generate_cube_scene(5, 0.5);
    const OracleResult oracle = pseudoinverse_covariance(rec);
    const MatX via_eig = test_support::eig_pseudoinverse(dense_fisher(rec));
    CHECK(test_support::rel_diff(oracle.sigma_full, via_eig) < 1e-6);
}

TEST_CASE("camera blocks are diagonal cuts of the full matrix") {
    const Reconstruction rec = generate_cube_scene(6, 0.5);
    const OracleResult oracle = pseudoinverse_covariance(rec);
    REQUIRE(oracle.cov.camera_cov.size() == 6);
    for (Index i = 0; i < 6; ++i)
        CHECK(oracle.cov.camera_cov[i] == oracle.sigma_full.block<8, 8>(8 * i, 8 * i));
    CHECK(oracle.cov.diagnostics.largest_dense_dim == rec.num_parameters());
}

TEST_CASE("the size guard refuses large scenes") {
    const Reconstruction rec = generate_cube_scene(1, 0.0);
    try {
        pseudoinverse_covariance(rec, 50);
        FAIL_CHECK("expected the size guard to fire");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::size_guard);
        CHECK(e.stage() == "oracle");
    }
}

TEST_CASE("the pipeline result matches the reference") {
    for (const Reconstruction& rec :
         {generate_cube_scene(7, 0.5), generate_random_scene(10, 80, 0.4, 6, 0.5)}) {
        const OracleResult oracle = pseudoinverse_covariance(rec);
        const CovarianceResult fast = compute_covariance(rec);
        const ErrorReport report = error_metric(oracle.cov, fast, rec);
        CHECK(report.mean < 1e-4);

        const MatX sigma = full_covariance(rec);
        CHECK(test_support::rel_diff(sigma, oracle.sigma_full) < 1e-6);
    }
}
