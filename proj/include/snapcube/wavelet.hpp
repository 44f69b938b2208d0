#pragma once

#include <cstddef>

#include "snapcube/array.hpp"

namespace snapcube {

/// Separable orthonormal multilevel Haar transform, T = T_x (x) T_y (x) T_lambda.
///
/// Each axis gets up to `levels` levels. A level on a segment of odd length
/// transforms the even prefix and carries the last sample into the coarse
/// part unchanged, so any shape is handled without padding and the
/// transform stays exactly orthonormal. Coefficients are stored in place:
/// along each axis the coarse part comes first, then the details of the
/// finest level last.
class HaarWavelet3D {
public:
    explicit HaarWavelet3D(int levels = 2) : levels_(levels) {}

    int levels() const noexcept { return levels_; }
    Array3 forward(const Array3& cube) const;
    Array3 inverse(const Array3& coefficients) const;

private:
    int levels_;
};

/// sign(c) * max(|c| - threshold, 0), elementwise.
Array3 soft_threshold(const Array3& coefficients, double threshold);
double soft_threshold(double c, double threshold);

}  // namespace snapcube
