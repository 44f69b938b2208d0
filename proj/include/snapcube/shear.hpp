#pragma once

#include "snapcube/array.hpp"

namespace snapcube {

/// Translates channel k of an object-frame cube (nx, ny, nl) to columns
/// [offset(k), offset(k) + ny) of a zero-padded frame of width ny + |step|(nl-1).
Array3 shear(const Array3& object, int dispersion_step);

/// Inverse translation, cropped to the common support: width W - |step|(nl-1).
/// unshear(shear(x)) == x exactly; it is also the adjoint of shear.
Array3 unshear(const Array3& sheared, int dispersion_step);

}  // namespace snapcube
