#pragma once

#include "sfmcov/covariance.hpp"
#include "sfmcov/types.hpp"

#include <array>
#include <string>

namespace sfmcov {

// Row-major upper triangle of an 8x8 symmetric block:
// (0,0),(0,1),...,(0,7),(1,1),...,(7,7).
std::array<double, 36> pack_upper_triangle(const Mat8& m);
Mat8 unpack_upper_triangle(const std::array<double, 36>& tri);

// JSON: {"cameras": [{"id", "cov": [36 entries]}...], "diagnostics": {...}}.
void save_covariance_json(const CovarianceResult& result, const std::string& path);
CovarianceResult load_covariance_json(const std::string& path);

// CSV: header id,cov_0_0,...,cov_7_7 then one row per camera.
void save_covariance_csv(const CovarianceResult& result, const std::string& path);

}  // namespace sfmcov
