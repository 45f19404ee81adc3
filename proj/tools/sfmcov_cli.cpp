#include "sfmcov/covariance.hpp"
#include "sfmcov/covariance_io.hpp"
#include "sfmcov/error.hpp"
#include "sfmcov/nullspace.hpp"
#include "sfmcov/oracle.hpp"
#include "sfmcov/scene_io.hpp"
#include "sfmcov/subrec.hpp"
#include "sfmcov/synthetic.hpp"
#include "sfmcov/threading.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace sfmcov;

// Exit codes: 0 success, 2 bad flags, 3 unreadable/unwritable or malformed
// files, 4 degenerate or invalid scenes, 5 verification threshold failure.
constexpr int kExitFlags = 2;
constexpr int kExitIo = 3;
constexpr int kExitScene = 4;
constexpr int kExitThreshold = 5;

constexpr double kVerifyMeanErrTol = 1e-4;

int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::io:
        case ErrorKind::parse:
            return kExitIo;
        default:
            return kExitScene;
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct GenerateConfig {
    bool cube = false;
    std::int64_t cams = 0;
    std::int64_t pts = 0;
    double visibility = 0.3;
    std::uint64_t seed = 1;
    double noise = 0.0;
    std::string output;
    bool porcelain = false;
};

int cmd_generate(const GenerateConfig& cfg) {
    if (!cfg.cube && (cfg.cams <= 0 || cfg.pts <= 0)) {
        std::cerr << "error: need --cube or both --cams and --pts\n";
        return kExitFlags;
    }
    const Reconstruction rec =
        cfg.cube ? generate_cube_scene(cfg.seed, cfg.noise)
                 : generate_random_scene(cfg.cams, cfg.pts, cfg.visibility, cfg.seed, cfg.noise);
    save_reconstruction(rec, cfg.output);
    std::cerr << "wrote " << rec.num_cameras() << " cameras, " << rec.num_points()
              << " points, " << rec.num_observations() << " observations to " << cfg.output
              << "\n";
    if (cfg.porcelain)
        std::cout << json{{"command", "generate"},
                          {"cameras", rec.num_cameras()},
                          {"points", rec.num_points()},
                          {"observations", rec.num_observations()},
                          {"output", cfg.output}}
                         .dump()
                  << "\n";
    return 0;
}

struct ComputeConfig {
    std::string input;
    std::string output;
    std::string format = "json";
    int threads = 0;
    bool porcelain = false;
};

int cmd_compute(const ComputeConfig& cfg) {
    const Reconstruction rec = load_reconstruction(cfg.input);
    std::cerr << "loaded " << rec.num_cameras() << " cameras, " << rec.num_points()
              << " points, " << rec.num_observations() << " observations\n";

    const auto t0 = std::chrono::steady_clock::now();
    CovarianceOptions options;
    options.threads = cfg.threads;
    const CovarianceResult result = compute_covariance(rec, options);
    const double elapsed = seconds_since(t0);
    std::cerr << "covariance of " << rec.num_cameras() << " cameras in " << elapsed << " s\n";

    if (cfg.format == "csv")
        save_covariance_csv(result, cfg.output);
    else
        save_covariance_json(result, cfg.output);

    if (cfg.porcelain)
        std::cout << json{{"command", "compute"},
                          {"cameras", rec.num_cameras()},
                          {"points", rec.num_points()},
                          {"observations", rec.num_observations()},
                          {"threads", resolve_threads(cfg.threads)},
                          {"seconds", elapsed},
                          {"min_pivot", result.diagnostics.min_pivot},
                          {"negative_eigenvalue_warnings",
                           result.diagnostics.negative_eigenvalue_warnings},
                          {"output", cfg.output}}
                         .dump()
                  << "\n";
    return 0;
}

struct VerifyConfig {
    std::string input;
    int threads = 0;
    Index max_params = kOracleMaxParams;
    bool corrupt = false;
    bool porcelain = false;
};

int cmd_verify(const VerifyConfig& cfg) {
    const Reconstruction rec = load_reconstruction(cfg.input);
    const int threads = resolve_threads(cfg.threads);

    const SparseJacobian jac = assemble_jacobian(rec, threads);
    const MatX h = gauge_nullspace(jac, rec);
    const double residual = nullspace_residual(jac, h);

    CovarianceOptions options;
    options.threads = cfg.threads;
    CovarianceResult result = compute_covariance(rec, options);
    if (cfg.corrupt) result.camera_cov[0](0, 0) += 1.0;  // test hook

    std::vector<std::string> failed;
    char line[160];
    if (!(residual < kNullspaceTol)) failed.push_back("nullspace_residual");
    if (result.diagnostics.negative_eigenvalue_warnings != 0) failed.push_back("psd");

    const bool oracle_runs = rec.num_parameters() <= cfg.max_params;
    double mean_err = 0.0, median_err = 0.0;
    if (oracle_runs) {
        const OracleResult oracle = pseudoinverse_covariance(rec, cfg.max_params);
        const ErrorReport report = error_metric(oracle.cov, result, rec);
        mean_err = report.mean;
        median_err = report.median;
        if (!(report.mean < kVerifyMeanErrTol)) failed.push_back("mean_err");
        if (!cfg.porcelain) {
            for (std::size_t i = 0; i < report.per_camera.size(); ++i) {
                std::snprintf(line, sizeof(line), "camera %4zu   err %.6e\n", i,
                              report.per_camera[i]);
                std::cout << line;
            }
            std::snprintf(line, sizeof(line), "mean err    %.6e   median err %.6e   (tol %.0e)\n",
                          report.mean, report.median, kVerifyMeanErrTol);
            std::cout << line;
        }
    } else {
        std::cerr << "oracle skipped: " << rec.num_parameters() << " parameters exceed the "
                  << cfg.max_params << " guard; running invariant checks only\n";
    }

    if (cfg.porcelain) {
        json doc{{"command", "verify"},
                 {"cameras", rec.num_cameras()},
                 {"nullspace_residual", residual},
                 {"psd_warnings", result.diagnostics.negative_eigenvalue_warnings},
                 {"oracle_skipped", !oracle_runs},
                 {"passed", failed.empty()},
                 {"failed", failed}};
        if (oracle_runs) {
            doc["mean_err"] = mean_err;
            doc["median_err"] = median_err;
        }
        std::cout << doc.dump() << "\n";
    } else {
        std::snprintf(line, sizeof(line), "nullspace residual   %.6e   (tol %.0e)\n", residual,
                      kNullspaceTol);
        std::cout << line;
        std::cout << "psd warnings         " << result.diagnostics.negative_eigenvalue_warnings
                  << "\n";
        if (failed.empty()) {
            std::cout << "PASS\n";
        } else {
            std::cout << "FAIL:";
            for (const std::string& name : failed) std::cout << ' ' << name;
            std::cout << "\n";
        }
    }
    return failed.empty() ? 0 : kExitThreshold;
}

struct SubrecConfig {
    std::string input;
    std::string output;
    std::string sweep_output;
    int k_bar = kDefaultSubsetSize;
    int decompositions = kDefaultDecompositions;
    std::uint64_t seed = 0;
    int threads = 0;
    std::vector<int> sweep_sizes{5, 10, 20, 40, 80};
    int subsets_per_size = 25;
    bool porcelain = false;
};

// Above this camera count the full-scene reference covariance for the sweep
// is no longer desk-cheap and the sweep is skipped with a notice.
constexpr Index kSweepMaxCameras = 400;

int cmd_subrec(const SubrecConfig& cfg) {
    const Reconstruction rec = load_reconstruction(cfg.input);
    const AggregatedCovariance agg =
        approximate_covariances(rec, cfg.k_bar, cfg.decompositions, cfg.seed, cfg.threads);

    json doc{{"kbar", cfg.k_bar},
             {"decompositions", cfg.decompositions},
             {"cameras", json::array()}};
    for (std::size_t i = 0; i < agg.cameras.size(); ++i)
        doc["cameras"].push_back(json{{"id", i},
                                      {"trace", agg.cameras[i].trace},
                                      {"subset", agg.cameras[i].subset_id},
                                      {"cov", pack_upper_triangle(agg.cameras[i].cov)}});
    {
        std::ofstream out(cfg.output);
        if (!out) throw Error(ErrorKind::io, "subrec", "cannot open '" + cfg.output + "'");
        out << doc.dump() << "\n";
        if (!out.flush())
            throw Error(ErrorKind::io, "subrec", "failed writing '" + cfg.output + "'");
    }
    std::cerr << "aggregated covariance for " << agg.cameras.size() << " cameras written to "
              << cfg.output << "\n";

    std::size_t sweep_rows = 0;
    bool sweep_ran = false;
    if (!cfg.sweep_output.empty()) {
        if (rec.num_cameras() > kSweepMaxCameras) {
            std::cerr << "sweep skipped: " << rec.num_cameras() << " cameras exceed the "
                      << kSweepMaxCameras << " full-reference guard\n";
        } else {
            const std::vector<SweepRow> rows = error_size_sweep(
                rec, cfg.sweep_sizes, cfg.subsets_per_size, cfg.seed, cfg.threads);
            write_sweep_csv(rows, cfg.sweep_output);
            sweep_rows = rows.size();
            sweep_ran = true;
            std::cerr << "sweep with " << rows.size() << " rows written to " << cfg.sweep_output
                      << "\n";
        }
    }

    if (cfg.porcelain)
        std::cout << json{{"command", "subrec"},
                          {"cameras", rec.num_cameras()},
                          {"kbar", cfg.k_bar},
                          {"decompositions", cfg.decompositions},
                          {"output", cfg.output},
                          {"sweep", sweep_ran},
                          {"sweep_rows", sweep_rows}}
                         .dump()
                  << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gauge-free covariance of camera parameters in SfM reconstructions"};
    app.require_subcommand(1);

    GenerateConfig gen_cfg;
    CLI::App* gen = app.add_subcommand("generate", "Write a synthetic scene file");
    gen->add_flag("--cube", gen_cfg.cube, "fixed six-camera cube scene");
    auto* cams_opt = gen->add_option("--cams", gen_cfg.cams, "ring camera count");
    auto* pts_opt = gen->add_option("--pts", gen_cfg.pts, "point count");
    gen->add_option("--visibility", gen_cfg.visibility, "fraction of cameras per point")
        ->capture_default_str();
    gen->add_option("--seed", gen_cfg.seed, "generator seed")->capture_default_str();
    gen->add_option("--noise", gen_cfg.noise, "pixel noise standard deviation")
        ->capture_default_str();
    gen->add_option("-o,--output", gen_cfg.output, "scene file to write")->required();
    gen->add_flag("--porcelain", gen_cfg.porcelain, "one-line JSON summary on stdout");
    cams_opt->excludes("--cube");
    pts_opt->excludes("--cube");

    ComputeConfig comp_cfg;
    CLI::App* comp = app.add_subcommand("compute", "Camera covariances of a scene");
    comp->add_option("-i,--input", comp_cfg.input, "scene file")->required();
    comp->add_option("-o,--output", comp_cfg.output, "covariance file to write")->required();
    comp->add_option("--format", comp_cfg.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    comp->add_option("--threads", comp_cfg.threads,
                     "worker threads (0 = SFMCOV_THREADS or all cores)")
        ->capture_default_str();
    comp->add_flag("--porcelain", comp_cfg.porcelain, "one-line JSON summary on stdout");

    VerifyConfig ver_cfg;
    CLI::App* ver = app.add_subcommand("verify", "Check a scene against the dense reference");
    ver->add_option("-i,--input", ver_cfg.input, "scene file")->required();
    ver->add_option("--threads", ver_cfg.threads,
                    "worker threads (0 = SFMCOV_THREADS or all cores)")
        ->capture_default_str();
    ver->add_option("--max-params", ver_cfg.max_params, "dense reference size guard")
        ->capture_default_str();
    ver->add_flag("--corrupt", ver_cfg.corrupt)->group("");  // test hook, hidden
    ver->add_flag("--porcelain", ver_cfg.porcelain, "one-line JSON summary on stdout");

    SubrecConfig sub_cfg;
    CLI::App* sub = app.add_subcommand("subrec", "Sub-reconstruction covariance approximation");
    sub->add_option("-i,--input", sub_cfg.input, "scene file")->required();
    sub->add_option("-o,--output", sub_cfg.output, "aggregated covariance JSON")->required();
    sub->add_option("--kbar", sub_cfg.k_bar, "cameras per sub-reconstruction")
        ->capture_default_str();
    sub->add_option("--decompositions", sub_cfg.decompositions, "independent coverings")
        ->capture_default_str();
    sub->add_option("--seed", sub_cfg.seed, "covering seed")->capture_default_str();
    sub->add_option("--threads", sub_cfg.threads,
                    "worker threads (0 = SFMCOV_THREADS or all cores)")
        ->capture_default_str();
    sub->add_option("--sweep-output", sub_cfg.sweep_output,
                    "also run the error-vs-size sweep, writing this CSV");
    sub->add_option("--sweep-sizes", sub_cfg.sweep_sizes, "window sizes for the sweep")
        ->delimiter(',')
        ->capture_default_str();
    sub->add_option("--subsets", sub_cfg.subsets_per_size, "random subsets per sweep size")
        ->capture_default_str();
    sub->add_flag("--porcelain", sub_cfg.porcelain, "one-line JSON summary on stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitFlags;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_cfg);
        if (comp->parsed()) return cmd_compute(comp_cfg);
        if (ver->parsed()) return cmd_verify(ver_cfg);
        if (sub->parsed()) return cmd_subrec(sub_cfg);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitScene;
    }
    return 0;
}
