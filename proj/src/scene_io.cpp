#include "sfmcov/scene_io.hpp"

#include "sfmcov/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>

namespace sfmcov {

namespace {

using nlohmann::json;

double number_field(const json& j, const char* key, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end())
        throw Error(ErrorKind::parse, "load", where + ": missing field '" + key + "'");
    if (!it->is_number())
        throw Error(ErrorKind::parse, "load", where + ": field '" + key + "' is not a number");
    return it->get<double>();
}

template <int N>
Eigen::Matrix<double, N, 1> vector_field(const json& j, const char* key, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end())
        throw Error(ErrorKind::parse, "load", where + ": missing field '" + key + "'");
    if (!it->is_array() || it->size() != N)
        throw Error(ErrorKind::parse, "load",
                    where + ": field '" + key + "' must be an array of " + std::to_string(N));
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) {
        if (!(*it)[i].is_number())
            throw Error(ErrorKind::parse, "load", where + ": field '" + key + "' has a non-number entry");
        v[i] = (*it)[i].get<double>();
    }
    return v;
}

const json& array_field(const json& root, const char* key) {
    const auto it = root.find(key);
    if (it == root.end())
        throw Error(ErrorKind::parse, "load", std::string("missing top-level array '") + key + "'");
    if (!it->is_array())
        throw Error(ErrorKind::parse, "load", std::string("top-level '") + key + "' is not an array");
    return *it;
}

bool identity_sigma(const Mat2& s) {
    return s(0, 0) == 1.0 && s(0, 1) == 0.0 && s(1, 0) == 0.0 && s(1, 1) == 1.0;
}

}  // namespace

Reconstruction load_reconstruction(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::io, "load", "cannot open '" + path + "' for reading");
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::parse, "load", std::string(e.what()));
    }
    if (!root.is_object())
        throw Error(ErrorKind::parse, "load", "top level is not an object");

    Reconstruction rec;
    const json& cams = array_field(root, "cameras");
    rec.cameras.reserve(cams.size());
    for (std::size_t i = 0; i < cams.size(); ++i) {
        const std::string where = "camera " + std::to_string(i);
        if (!cams[i].is_object())
            throw Error(ErrorKind::parse, "load", where + ": not an object");
        Camera cam;
        cam.r = vector_field<3>(cams[i], "r", where);
        cam.C = vector_field<3>(cams[i], "C", where);
        cam.c = number_field(cams[i], "c", where);
        cam.k = number_field(cams[i], "k", where);
        rec.cameras.push_back(cam);
    }

    const json& pts = array_field(root, "points");
    rec.points.reserve(pts.size());
    for (std::size_t j = 0; j < pts.size(); ++j) {
        const std::string where = "point " + std::to_string(j);
        if (!pts[j].is_array() || pts[j].size() != 3)
            throw Error(ErrorKind::parse, "load", where + ": must be an array of 3");
        Point3D p;
        for (int a = 0; a < 3; ++a) {
            if (!pts[j][a].is_number())
                throw Error(ErrorKind::parse, "load", where + ": non-number coordinate");
            p.X[a] = pts[j][a].get<double>();
        }
        rec.points.push_back(p);
    }

    const json& obs_arr = array_field(root, "observations");
    rec.observations.reserve(obs_arr.size());
    for (std::size_t t = 0; t < obs_arr.size(); ++t) {
        const std::string where = "observation " + std::to_string(t);
        if (!obs_arr[t].is_object())
            throw Error(ErrorKind::parse, "load", where + ": not an object");
        Observation obs;
        const double cam_id = number_field(obs_arr[t], "cam", where);
        const double pt_id = number_field(obs_arr[t], "pt", where);
        obs.cam_index = static_cast<std::int32_t>(cam_id);
        obs.point_index = static_cast<std::int32_t>(pt_id);
        obs.u = vector_field<2>(obs_arr[t], "u", where);
        if (obs_arr[t].contains("sigma")) {
            const Vec3 s = vector_field<3>(obs_arr[t], "sigma", where);
            obs.sigma << s[0], s[1], s[1], s[2];
        }
        rec.observations.push_back(obs);
    }

    rec.validate();
    return rec;
}

void save_reconstruction(const Reconstruction& rec, const std::string& path) {
    if (rec.cameras.empty())
        throw Error(ErrorKind::invariant, "save", "reconstruction has no cameras");
    rec.validate();

    json root;
    json cams = json::array();
    for (const Camera& cam : rec.cameras) {
        cams.push_back({{"r", {cam.r.x(), cam.r.y(), cam.r.z()}},
                        {"C", {cam.C.x(), cam.C.y(), cam.C.z()}},
                        {"c", cam.c},
                        {"k", cam.k}});
    }
    root["cameras"] = std::move(cams);

    json pts = json::array();
    for (const Point3D& p : rec.points) pts.push_back({p.X.x(), p.X.y(), p.X.z()});
    root["points"] = std::move(pts);

    json obs_arr = json::array();
    for (const Observation& obs : rec.observations) {
        json o = {{"cam", obs.cam_index},
                  {"pt", obs.point_index},
                  {"u", {obs.u.x(), obs.u.y()}}};
        if (!identity_sigma(obs.sigma))
            o["sigma"] = {obs.sigma(0, 0), obs.sigma(0, 1), obs.sigma(1, 1)};
        obs_arr.push_back(std::move(o));
    }
    root["observations"] = std::move(obs_arr);

    std::ofstream out(path);
    if (!out)
        throw Error(ErrorKind::io, "save", "cannot open '" + path + "' for writing");
    out << root.dump() << '\n';
    if (!out)
        throw Error(ErrorKind::io, "save", "write failed for '" + path + "'");
}

}  // namespace sfmcov
