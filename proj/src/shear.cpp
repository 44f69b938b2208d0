#include "snapcube/shear.hpp"

#include <algorithm>
#include <cstdlib>

#include "snapcube/error.hpp"
#include "snapcube/types.hpp"

namespace snapcube {
namespace {

std::size_t offset(std::size_t k, std::size_t nl, int step) {
    CodedAperture probe;
    probe.dispersion_step = step;
    return probe.channel_offset(k, nl);
}

}  // namespace

Array3 shear(const Array3& object, int dispersion_step) {
    if (dispersion_step == 0) throw ValidationError("dispersion-step", "shear step must be nonzero");
    const std::size_t nx = object.nx(), ny = object.ny(), nl = object.nz();
    Array3 out(nx, measurement_width(ny, nl, dispersion_step), nl);
    for (std::size_t k = 0; k < nl; ++k) {
        const std::size_t off = offset(k, nl, dispersion_step);
        for (std::size_t i = 0; i < nx; ++i) {
            auto src = object.row(i, k);
            std::copy(src.begin(), src.end(), out.row(i, k).begin() + static_cast<std::ptrdiff_t>(off));
        }
    }
    return out;
}

Array3 unshear(const Array3& sheared, int dispersion_step) {
    if (dispersion_step == 0) throw ValidationError("dispersion-step", "shear step must be nonzero");
    const std::size_t nx = sheared.nx(), w = sheared.ny(), nl = sheared.nz();
    const std::size_t span = static_cast<std::size_t>(std::abs(dispersion_step)) * (nl - 1);
    if (w <= span) throw ValidationError("dimension-mismatch", "sheared width too small for the channel count");
    const std::size_t ny = w - span;
    Array3 out(nx, ny, nl);
    for (std::size_t k = 0; k < nl; ++k) {
        const std::size_t off = offset(k, nl, dispersion_step);
        for (std::size_t i = 0; i < nx; ++i) {
            auto src = sheared.row(i, k);
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(off), ny, out.row(i, k).begin());
        }
    }
    return out;
}

}  // namespace snapcube
