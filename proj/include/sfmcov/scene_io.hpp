#pragma once

#include "sfmcov/types.hpp"

#include <string>

namespace sfmcov {

// JSON scene format: top-level keys `cameras` (array of {r:[3], C:[3], c, k}),
// `points` (array of [3]), `observations` (array of {cam, pt, u:[2], sigma}).
// `sigma` is the covariance upper triangle [s00, s01, s11] and may be omitted
// for the identity. Numeric fields round-trip bit-exactly.
Reconstruction load_reconstruction(const std::string& path);

void save_reconstruction(const Reconstruction& rec, const std::string& path);

}  // namespace sfmcov
