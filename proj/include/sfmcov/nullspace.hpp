#pragma once

#include "sfmcov/projection.hpp"
#include "sfmcov/types.hpp"

namespace sfmcov {

// |J*H|_max must stay below this times |J|_max * |H|_max for a valid gauge
// nullspace.
inline constexpr double kNullspaceTol = 1e-8;

// Reciprocal-condition floor for the per-camera 3x3 rotation systems.
inline constexpr double kRotationCondTol = 1e-12;

// The gauge nullspace is a dense (8n+3m) x 7 matrix. Columns are grouped as
// translation (3), rotation (3), scale (1); rows follow the parameter vector
// (P_1..P_n, X_1..X_m).

// Fills the closed-form rows: camera-center block [I | [C]x | C], point block
// [I | [X]x | X], zero focal/distortion rows. The rotation columns of the
// camera-rotation rows are left zero for solve_rotation_blocks.
MatX fixed_nullspace_blocks(const Reconstruction& rec);

// Completes the camera-rotation 3x3 blocks by solving, per camera, the
// normal equations of the stacked system J_r * H_r = -(J_C [C]x + J_X [X]x)
// over that camera's observations. The stacked system is consistent (gauge
// invariance is exact), so the normal equations introduce no bias.
// Throws Error(degenerate) naming the camera when its 3x3 normal matrix has
// reciprocal condition below kRotationCondTol.
void solve_rotation_blocks(const SparseJacobian& jac, MatX& h);

// fixed_nullspace_blocks + solve_rotation_blocks.
MatX gauge_nullspace(const SparseJacobian& jac, const Reconstruction& rec);

// max |J*H| / (max |J| * max |H|), computed block-sparsely.
double nullspace_residual(const SparseJacobian& jac, const MatX& h);

}  // namespace sfmcov
