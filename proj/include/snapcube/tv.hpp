#pragma once

#include "snapcube/array.hpp"

namespace snapcube {

/// Anisotropic 2D total variation summed over every slice:
/// sum |p(i+1,j) - p(i,j)| + |p(i,j+1) - p(i,j)|.
double anisotropic_tv(const Array3& cube);

/// Approximately solves, slice by slice,
///   argmin_p 1/2 ||p - target||^2 + weight * TV_aniso(p)
/// with a fixed number of fast gradient-projection steps on the dual
/// (box-constrained) problem. Deterministic; weight == 0 returns the target.
Array3 tv_denoise(const Array3& target, double weight, int iterations);

}  // namespace snapcube
