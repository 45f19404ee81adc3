#pragma once

#include "sfmcov/covariance.hpp"
#include "sfmcov/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sfmcov {

// Window sizes at which sub-scene covariances are usually close to the full
// ones; callers may override both.
inline constexpr int kDefaultSubsetSize = 100;
inline constexpr int kDefaultDecompositions = 3;

// Undirected camera graph; edge weight = number of co-observed points.
struct ViewGraph {
    Index n_cams = 0;
    // Per camera: (neighbor, weight), sorted by neighbor index.
    std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> edges;
};

// One induced sub-reconstruction. `scene` is reindexed: local camera l is
// global cameras[l], local point l is global points[l].
struct SubScene {
    std::vector<std::int32_t> cameras;  // ascending global ids
    std::vector<std::int32_t> points;   // ascending global ids
    Reconstruction scene;
    bool component_truncated = false;   // component was smaller than requested
};

struct SubRecPlan {
    int target_size = 0;
    std::vector<SubScene> subsets;
};

struct CameraEstimate {
    Mat8 cov = Mat8::Zero();
    double trace = 0.0;
    std::int32_t subset_id = -1;  // which subset produced the kept block
};

struct AggregatedCovariance {
    int target_size = 0;
    std::vector<CameraEstimate> cameras;  // indexed by global camera id
};

struct MonotonicityReport {
    struct Violation {
        std::int32_t camera = 0;
        double trace_small = 0.0;
        double trace_large = 0.0;
    };
    std::vector<Violation> violations;
    Index cameras_checked = 0;
};

struct SweepRow {
    int k_bar = 0;
    int subset_id = 0;
    std::int32_t camera_id = 0;
    double err_relative = 0.0;
    double err_absolute = 0.0;
    double trace = 0.0;
};

ViewGraph build_view_graph(const Reconstruction& rec, int min_covis = 1);

// Greedy neighborhood: start from `center`, repeatedly add the outside
// camera with the largest total co-observation weight into the current set
// (ties to the lowest index), until k_bar cameras or the connected component
// is exhausted (then component_truncated is set). Points kept only when at
// least two subset cameras observe them; cameras starved below four
// observations by that filter are dropped, to a fixpoint.
SubScene extract_neighborhood(const Reconstruction& rec, const ViewGraph& graph, Index center,
                              int k_bar);

// Covers every camera: repeatedly picks an uncovered camera at random
// (seeded) and grows a neighborhood around it.
SubRecPlan plan_coverage(const Reconstruction& rec, const ViewGraph& graph, int k_bar,
                         std::uint64_t seed);

// n_decompositions independent coverings (seeds seed, seed+1, ...); per
// camera the smallest-trace block wins, earliest subset on ties.
AggregatedCovariance approximate_covariances(const Reconstruction& rec, int k_bar,
                                             int n_decompositions, std::uint64_t seed,
                                             int threads = 0);

// Requires small.cameras to be a subset of large.cameras; lists every shared
// camera whose small-subset trace falls below the large-subset trace by more
// than rel_tol relative.
MonotonicityReport monotonicity_check(const Reconstruction& rec, const SubScene& small,
                                      const SubScene& large, double rel_tol = 1e-8);

// For each window size: draws subsets_per_size random centers, computes the
// sub-scene covariances and compares every camera block against the
// full-scene one (Frobenius norm, absolute and relative).
std::vector<SweepRow> error_size_sweep(const Reconstruction& rec, const std::vector<int>& sizes,
                                       int subsets_per_size, std::uint64_t seed, int threads = 0);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

}  // namespace sfmcov
