#include "sfmcov/subrec.hpp"

#include "sfmcov/error.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sfmcov {

namespace {

std::uint64_t pair_key(std::int32_t a, std::int32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// Keeps only points observed by at least two subset cameras and cameras with
// at least four surviving observations, iterated to a fixpoint. The filter
// is monotone in the camera set, so nested inputs give nested outputs.
SubScene induced_scene(const Reconstruction& rec, std::vector<std::int32_t> cams,
                       bool truncated) {
    const Index n = rec.num_cameras();
    const Index m = rec.num_points();
    std::vector<char> cam_in(n, 0);
    for (const std::int32_t c : cams) cam_in[c] = 1;

    std::vector<std::int32_t> candidate;
    for (std::int32_t t = 0; t < static_cast<std::int32_t>(rec.observations.size()); ++t)
        if (cam_in[rec.observations[t].cam_index]) candidate.push_back(t);

    std::vector<char> pt_in(m, 0);
    std::vector<std::int32_t> pt_count(m), cam_count(n);
    for (bool changed = true; changed;) {
        std::fill(pt_count.begin(), pt_count.end(), 0);
        for (const std::int32_t t : candidate)
            if (cam_in[rec.observations[t].cam_index]) ++pt_count[rec.observations[t].point_index];
        for (Index j = 0; j < m; ++j) pt_in[j] = pt_count[j] >= 2;

        std::fill(cam_count.begin(), cam_count.end(), 0);
        for (const std::int32_t t : candidate)
            if (cam_in[rec.observations[t].cam_index] && pt_in[rec.observations[t].point_index])
                ++cam_count[rec.observations[t].cam_index];
        changed = false;
        for (Index i = 0; i < n; ++i)
            if (cam_in[i] && cam_count[i] < 4) {
                cam_in[i] = 0;
                changed = true;
            }
    }

    SubScene sub;
    sub.component_truncated = truncated;
    std::vector<std::int32_t> cam_local(n, -1), pt_local(m, -1);
    for (Index i = 0; i < n; ++i)
        if (cam_in[i]) {
            cam_local[i] = static_cast<std::int32_t>(sub.cameras.size());
            sub.cameras.push_back(static_cast<std::int32_t>(i));
            sub.scene.cameras.push_back(rec.cameras[i]);
        }
    if (sub.cameras.empty())
        throw Error(ErrorKind::degenerate, "subrec", "induced sub-reconstruction is empty");
    for (Index j = 0; j < m; ++j)
        if (pt_in[j]) {
            pt_local[j] = static_cast<std::int32_t>(sub.points.size());
            sub.points.push_back(static_cast<std::int32_t>(j));
            sub.scene.points.push_back(rec.points[j]);
        }
    for (const std::int32_t t : candidate) {
        const Observation& o = rec.observations[t];
        if (!cam_in[o.cam_index] || !pt_in[o.point_index]) continue;
        Observation local = o;
        local.cam_index = cam_local[o.cam_index];
        local.point_index = pt_local[o.point_index];
        sub.scene.observations.push_back(local);
    }
    sub.scene.validate();
    return sub;
}

}  // namespace

ViewGraph build_view_graph(const Reconstruction& rec, int min_covis) {
    const ObservationIndex index = build_observation_index(rec);
    std::unordered_map<std::uint64_t, std::int32_t> counts;
    std::vector<std::int32_t> observers;
    for (Index j = 0; j < rec.num_points(); ++j) {
        observers.clear();
        for (const std::int32_t t : index.by_point[j])
            observers.push_back(rec.observations[t].cam_index);
        std::sort(observers.begin(), observers.end());
        for (std::size_t a = 0; a < observers.size(); ++a)
            for (std::size_t b = a + 1; b < observers.size(); ++b)
                ++counts[pair_key(observers[a], observers[b])];
    }

    ViewGraph graph;
    graph.n_cams = rec.num_cameras();
    graph.edges.resize(graph.n_cams);
    for (const auto& [key, w] : counts) {
        if (w < min_covis) continue;
        const auto a = static_cast<std::int32_t>(key >> 32);
        const auto b = static_cast<std::int32_t>(key & 0xffffffffu);
        graph.edges[a].emplace_back(b, w);
        graph.edges[b].emplace_back(a, w);
    }
    for (auto& adj : graph.edges) std::sort(adj.begin(), adj.end());
    return graph;
}

SubScene extract_neighborhood(const Reconstruction& rec, const ViewGraph& graph, Index center,
                              int k_bar) {
    const Index n = rec.num_cameras();
    if (k_bar < 2)
        throw Error(ErrorKind::invariant, "subrec", "subset size must be at least 2");
    if (center < 0 || center >= n || graph.n_cams != n)
        throw Error(ErrorKind::invariant, "subrec", "center camera or view graph out of range");

    std::vector<char> in_set(n, 0);
    std::vector<std::int64_t> weight(n, 0);
    std::vector<std::int32_t> chosen{static_cast<std::int32_t>(center)};
    in_set[center] = 1;
    for (const auto& [nbr, w] : graph.edges[center]) weight[nbr] += w;

    bool truncated = false;
    while (static_cast<int>(chosen.size()) < k_bar) {
        Index best = -1;
        std::int64_t best_w = 0;
        for (Index i = 0; i < n; ++i)
            if (!in_set[i] && weight[i] > best_w) {
                best_w = weight[i];
                best = i;
            }
        if (best < 0) {
            truncated = true;  // connected component exhausted
            break;
        }
        chosen.push_back(static_cast<std::int32_t>(best));
        in_set[best] = 1;
        for (const auto& [nbr, w] : graph.edges[best])
            if (!in_set[nbr]) weight[nbr] += w;
    }
    std::sort(chosen.begin(), chosen.end());
    return induced_scene(rec, std::move(chosen), truncated);
}

SubRecPlan plan_coverage(const Reconstruction& rec, const ViewGraph& graph, int k_bar,
                         std::uint64_t seed) {
    const Index n = rec.num_cameras();
    SubRecPlan plan;
    plan.target_size = k_bar;
    std::mt19937_64 rng(seed);
    std::vector<char> covered(n, 0);
    Index remaining = n;
    std::vector<Index> pool;
    while (remaining > 0) {
        pool.clear();
        for (Index i = 0; i < n; ++i)
            if (!covered[i]) pool.push_back(i);
        const Index center = pool[std::uniform_int_distribution<std::size_t>(
            0, pool.size() - 1)(rng)];
        SubScene sub = extract_neighborhood(rec, graph, center, k_bar);
        if (!std::binary_search(sub.cameras.begin(), sub.cameras.end(),
                                static_cast<std::int32_t>(center)))
            throw Error(ErrorKind::degenerate, "subrec",
                        "camera " + std::to_string(center) +
                            " cannot anchor a sub-reconstruction of size " +
                            std::to_string(k_bar));
        for (const std::int32_t c : sub.cameras)
            if (!covered[c]) {
                covered[c] = 1;
                --remaining;
            }
        plan.subsets.push_back(std::move(sub));
    }
    return plan;
}

AggregatedCovariance approximate_covariances(const Reconstruction& rec, int k_bar,
                                             int n_decompositions, std::uint64_t seed,
                                             int threads) {
    if (k_bar < 2)
        throw Error(ErrorKind::invariant, "subrec", "subset size must be at least 2");
    if (n_decompositions < 1)
        throw Error(ErrorKind::invariant, "subrec", "need at least one decomposition");
    rec.validate();

    const ViewGraph graph = build_view_graph(rec);
    AggregatedCovariance agg;
    agg.target_size = k_bar;
    agg.cameras.resize(rec.num_cameras());
    std::vector<char> seen(rec.num_cameras(), 0);

    CovarianceOptions options;
    options.threads = threads;
    std::int32_t subset_id = 0;
    for (int d = 0; d < n_decompositions; ++d) {
        const SubRecPlan plan = plan_coverage(rec, graph, k_bar, seed + std::uint64_t(d));
        for (const SubScene& sub : plan.subsets) {
            CovarianceResult result;
            try {
                result = compute_covariance(sub.scene, options);
            } catch (const Error& e) {
                throw Error(e.kind(), "subrec",
                            "subset " + std::to_string(subset_id) + " (decomposition " +
                                std::to_string(d) + "): " + e.what());
            }
            for (std::size_t l = 0; l < sub.cameras.size(); ++l) {
                const std::int32_t g = sub.cameras[l];
                const double tr = result.camera_cov[l].trace();
                if (!seen[g] || tr < agg.cameras[g].trace) {
                    seen[g] = 1;
                    agg.cameras[g] = {result.camera_cov[l], tr, subset_id};
                }
            }
            ++subset_id;
        }
    }
    for (Index i = 0; i < rec.num_cameras(); ++i)
        if (!seen[i])
            throw Error(ErrorKind::invariant, "subrec",
                        "camera " + std::to_string(i) + " was not covered by any subset");
    return agg;
}

MonotonicityReport monotonicity_check(const Reconstruction& rec, const SubScene& small,
                                      const SubScene& large, double rel_tol) {
    for (const std::int32_t c : small.cameras) {
        if (c < 0 || c >= rec.num_cameras())
            throw Error(ErrorKind::invariant, "subrec", "subset camera id out of range");
        if (!std::binary_search(large.cameras.begin(), large.cameras.end(), c))
            throw Error(ErrorKind::invariant, "subrec",
                        "subsets are not nested: camera " + std::to_string(c) +
                            " is missing from the larger subset");
    }

    const CovarianceResult r_small = compute_covariance(small.scene);
    const CovarianceResult r_large = compute_covariance(large.scene);
    MonotonicityReport report;
    for (std::size_t l = 0; l < small.cameras.size(); ++l) {
        const std::int32_t g = small.cameras[l];
        const auto pos = std::lower_bound(large.cameras.begin(), large.cameras.end(), g) -
                         large.cameras.begin();
        const double t_small = r_small.camera_cov[l].trace();
        const double t_large = r_large.camera_cov[pos].trace();
        ++report.cameras_checked;
        if (t_small < t_large - rel_tol * std::abs(t_large))
            report.violations.push_back({g, t_small, t_large});
    }
    return report;
}

std::vector<SweepRow> error_size_sweep(const Reconstruction& rec, const std::vector<int>& sizes,
                                       int subsets_per_size, std::uint64_t seed, int threads) {
    if (subsets_per_size < 1)
        throw Error(ErrorKind::invariant, "subrec", "need at least one subset per size");
    rec.validate();

    CovarianceOptions options;
    options.threads = threads;
    const CovarianceResult full = compute_covariance(rec, options);
    const ViewGraph graph = build_view_graph(rec);

    const Index n = rec.num_cameras();
    std::mt19937_64 rng(seed);
    std::vector<Index> ids(n);
    std::vector<SweepRow> rows;
    for (const int k : sizes) {
        std::iota(ids.begin(), ids.end(), Index{0});
        std::shuffle(ids.begin(), ids.end(), rng);
        for (int s = 0; s < subsets_per_size; ++s) {
            const Index center = ids[static_cast<std::size_t>(s) % ids.size()];
            SubScene sub = extract_neighborhood(rec, graph, center, k);
            CovarianceResult result;
            try {
                result = compute_covariance(sub.scene, options);
            } catch (const Error& e) {
                throw Error(e.kind(), "subrec",
                            "sweep size " + std::to_string(k) + " subset " + std::to_string(s) +
                                ": " + e.what());
            }
            for (std::size_t l = 0; l < sub.cameras.size(); ++l) {
                const std::int32_t g = sub.cameras[l];
                const double err_abs = (result.camera_cov[l] - full.camera_cov[g]).norm();
                const double ref = full.camera_cov[g].norm();
                rows.push_back({k, s, g, ref > 0.0 ? err_abs / ref : err_abs, err_abs,
                                result.camera_cov[l].trace()});
            }
        }
    }
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorKind::io, "subrec", "cannot open '" + path + "' for writing");
    out << "kbar,subset_id,camera_id,err_relative,err_absolute,trace\n";
    char line[256];
    for (const SweepRow& r : rows) {
        std::snprintf(line, sizeof(line), "%d,%d,%d,%.17g,%.17g,%.17g\n", r.k_bar, r.subset_id,
                      r.camera_id, r.err_relative, r.err_absolute, r.trace);
        out << line;
    }
    if (!out.flush())
        throw Error(ErrorKind::io, "subrec", "failed writing '" + path + "'");
}

}  // namespace sfmcov
