#include "sfmcov/covariance_io.hpp"

#include "sfmcov/error.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <string>

namespace sfmcov {

namespace {

using nlohmann::json;

json diagnostics_to_json(const CovarianceDiagnostics& d) {
    return json{{"scale_min", d.scale_min},
                {"scale_max", d.scale_max},
                {"flagged_columns", d.flagged_columns},
                {"min_pivot", d.min_pivot},
                {"max_pivot", d.max_pivot},
                {"inertia_positive", d.inertia_positive},
                {"inertia_negative", d.inertia_negative},
                {"negative_eigenvalue_warnings", d.negative_eigenvalue_warnings},
                {"peak_dense_bytes", d.peak_dense_bytes},
                {"largest_dense_dim", d.largest_dense_dim}};
}

}  // namespace

std::array<double, 36> pack_upper_triangle(const Mat8& m) {
    std::array<double, 36> tri;
    std::size_t k = 0;
    for (int r = 0; r < 8; ++r)
        for (int c = r; c < 8; ++c) tri[k++] = m(r, c);
    return tri;
}

Mat8 unpack_upper_triangle(const std::array<double, 36>& tri) {
    Mat8 m;
    std::size_t k = 0;
    for (int r = 0; r < 8; ++r)
        for (int c = r; c < 8; ++c) {
            m(r, c) = tri[k];
            m(c, r) = tri[k];
            ++k;
        }
    return m;
}

void save_covariance_json(const CovarianceResult& result, const std::string& path) {
    json doc;
    doc["cameras"] = json::array();
    for (std::size_t i = 0; i < result.camera_cov.size(); ++i)
        doc["cameras"].push_back(
            json{{"id", i}, {"cov", pack_upper_triangle(result.camera_cov[i])}});
    doc["diagnostics"] = diagnostics_to_json(result.diagnostics);

    std::ofstream out(path);
    if (!out)
        throw Error(ErrorKind::io, "save", "cannot open '" + path + "' for writing");
    out << doc.dump() << '\n';
    if (!out.flush())
        throw Error(ErrorKind::io, "save", "failed writing '" + path + "'");
}

CovarianceResult load_covariance_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::io, "load", "cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, "load", std::string("invalid JSON: ") + e.what());
    }

    CovarianceResult result;
    try {
        for (const json& cam : doc.at("cameras")) {
            const auto tri = cam.at("cov").get<std::array<double, 36>>();
            result.camera_cov.push_back(unpack_upper_triangle(tri));
        }
        const json& d = doc.at("diagnostics");
        result.diagnostics.scale_min = d.at("scale_min").get<double>();
        result.diagnostics.scale_max = d.at("scale_max").get<double>();
        result.diagnostics.flagged_columns = d.at("flagged_columns").get<std::vector<Index>>();
        result.diagnostics.min_pivot = d.at("min_pivot").get<double>();
        result.diagnostics.max_pivot = d.at("max_pivot").get<double>();
        result.diagnostics.inertia_positive = d.at("inertia_positive").get<int>();
        result.diagnostics.inertia_negative = d.at("inertia_negative").get<int>();
        result.diagnostics.negative_eigenvalue_warnings =
            d.at("negative_eigenvalue_warnings").get<int>();
        result.diagnostics.peak_dense_bytes = d.at("peak_dense_bytes").get<std::size_t>();
        result.diagnostics.largest_dense_dim = d.at("largest_dense_dim").get<Index>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, "load", std::string("bad covariance file: ") + e.what());
    }
    return result;
}

void save_covariance_csv(const CovarianceResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorKind::io, "save", "cannot open '" + path + "' for writing");
    out << "id";
    for (int r = 0; r < 8; ++r)
        for (int c = r; c < 8; ++c) out << ",cov_" << r << '_' << c;
    out << '\n';
    char cell[40];
    for (std::size_t i = 0; i < result.camera_cov.size(); ++i) {
        out << i;
        for (const double v : pack_upper_triangle(result.camera_cov[i])) {
            std::snprintf(cell, sizeof(cell), ",%.17g", v);
            out << cell;
        }
        out << '\n';
    }
    if (!out.flush())
        throw Error(ErrorKind::io, "save", "failed writing '" + path + "'");
}

}  // namespace sfmcov
