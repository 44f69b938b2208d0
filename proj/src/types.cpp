#include "snapcube/types.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "snapcube/error.hpp"

namespace snapcube {

double SpectralGrid::wavelength_nm(std::size_t j) const {
    const double centre = (static_cast<double>(num_channels) - 1.0) / 2.0;
    return center_wavelength_nm + (static_cast<double>(j) - centre) * channel_spacing_nm;
}

double SpectralGrid::wavenumber(std::size_t j) const {
    return 2.0 * std::numbers::pi / wavelength_nm(j);
}

std::vector<double> SpectralGrid::wavenumbers() const {
    std::vector<double> k(num_channels);
    for (std::size_t j = 0; j < num_channels; ++j) k[j] = wavenumber(j);
    return k;
}

DepthGrid DepthGrid::from_spectral(const SpectralGrid& spectral) {
    DepthGrid g;
    g.num_planes = (spectral.num_channels + 1) / 2;
    const double lc = spectral.center_wavelength_nm;
    g.plane_spacing_um = lc * lc / (2.0 * spectral.sampled_width_nm()) / 1000.0;
    g.origin_um = 0.0;
    return g;
}

std::size_t measurement_width(std::size_t ny, std::size_t num_channels, int dispersion_step) {
    const auto step = static_cast<std::size_t>(std::abs(dispersion_step));
    return ny + step * (num_channels - 1);
}

std::size_t CodedAperture::object_width(std::size_t num_channels) const {
    const auto step = static_cast<std::size_t>(std::abs(dispersion_step));
    const std::size_t span = step * (num_channels - 1);
    if (pattern.ny() <= span) {
        throw ValidationError("aperture-width", "pattern narrower than the shear span");
    }
    return pattern.ny() - span;
}

std::size_t CodedAperture::channel_offset(std::size_t k, std::size_t num_channels) const {
    const auto step = static_cast<long long>(dispersion_step);
    const long long raw = step * static_cast<long long>(k);
    const long long lowest = std::min(0LL, step * static_cast<long long>(num_channels - 1));
    return static_cast<std::size_t>(raw - lowest);
}

double CodedAperture::shifted(std::size_t i, std::size_t j_sheared, std::size_t k,
                              std::size_t num_channels) const {
    const std::size_t off = channel_offset(k, num_channels);
    const std::size_t ny = object_width(num_channels);
    if (j_sheared < off || j_sheared >= off + ny) return 0.0;
    return pattern(i, aperture_column(j_sheared - off, num_channels));
}

namespace {

void require(bool ok, const char* invariant, const std::string& detail) {
    if (!ok) throw ValidationError(invariant, detail);
}

template <typename Span>
void require_finite(const Span& values, const char* what) {
    for (std::size_t n = 0; n < values.size(); ++n) {
        if (!std::isfinite(values[n])) {
            std::ostringstream os;
            os << what << " entry " << n << " is not finite";
            throw ValidationError("non-finite", os.str());
        }
    }
}

template <typename Span>
void require_range(const Span& values, double lo, double hi, const char* what) {
    for (std::size_t n = 0; n < values.size(); ++n) {
        if (values[n] < lo || values[n] > hi) {
            std::ostringstream os;
            os << what << " entry " << n << " = " << values[n] << " outside [" << lo << ", " << hi << "]";
            throw ValidationError("out-of-range", os.str());
        }
    }
}

}  // namespace

void validate(const SpectralGrid& grid) {
    require(grid.num_channels >= 1, "num-channels", "need at least one channel");
    require(std::isfinite(grid.channel_spacing_nm) && grid.channel_spacing_nm > 0.0,
            "channel-spacing", "channel spacing must be positive");
    require(std::isfinite(grid.center_wavelength_nm), "non-finite", "centre wavelength");
    require(grid.wavelength_nm(0) > 0.0, "positive-wavelength", "shortest wavelength must be > 0");
}

void validate(const DepthGrid& grid) {
    require(grid.num_planes >= 1, "num-planes", "need at least one depth plane");
    require(std::isfinite(grid.plane_spacing_um) && grid.plane_spacing_um > 0.0, "plane-spacing",
            "plane spacing must be positive");
    require(std::isfinite(grid.origin_um) && grid.origin_um >= 0.0, "nonnegative-depth",
            "depth planes must lie on the positive side of the reference mirror");
}

void validate(const ReflectivityVolume& volume) {
    validate(volume.depth);
    require(volume.data.nz() == volume.depth.num_planes, "dimension-mismatch",
            "volume plane count differs from its depth grid");
    require(volume.pixel_pitch_um > 0.0, "pixel-pitch", "pixel pitch must be positive");
    require_finite(volume.data.values(), "reflectivity");
    require_range(volume.data.values(), 0.0, 1.0, "reflectivity");
}

void validate(const SpectralCube& cube) {
    validate(cube.grid);
    require(cube.data.nz() == cube.grid.num_channels, "dimension-mismatch",
            "cube channel count differs from its spectral grid");
    require_finite(cube.data.values(), "cube");
    if (cube.kind == CubeKind::total_intensity) {
        for (std::size_t n = 0; n < cube.data.size(); ++n) {
            if (cube.data[n] < 0.0) {
                throw ValidationError("out-of-range", "total-intensity cube has a negative entry");
            }
        }
    }
}

void validate(const CodedAperture& aperture) {
    require(aperture.dispersion_step != 0, "dispersion-step", "shear step must be nonzero");
    require_finite(aperture.pattern.values(), "mask");
    require_range(aperture.pattern.values(), 0.0, 1.0, "mask");
}

void validate(const CodedAperture& aperture, std::size_t num_channels) {
    validate(aperture);
    require(num_channels >= 1, "num-channels", "need at least one channel");
    const auto step = static_cast<std::size_t>(std::abs(aperture.dispersion_step));
    require(aperture.pattern.ny() > step * (num_channels - 1), "dimension-mismatch",
            "pattern width cannot hold every shifted channel view");
}

void validate(const CameraModel& camera) {
    require(camera.full_well_capacity_e > 0.0, "full-well-capacity", "FWC must be positive");
    require(camera.bit_depth >= 8 && camera.bit_depth <= 16, "bit-depth", "bit depth must be in 8..16");
    require(camera.pixel_pitch_um > 0.0, "pixel-pitch", "pixel pitch must be positive");
    require(camera.oversample_factor >= 1, "oversample-factor", "oversample factor must be >= 1");
}

void validate(const Measurement& m) {
    validate(m.camera);
    require_finite(m.image.values(), "measurement");
    for (const auto* frame : {&m.dc_reference, &m.dc_sample}) {
        if (!frame->has_value()) continue;
        require((*frame)->same_shape(m.image), "dimension-mismatch", "DC frame shape differs from image");
        require_finite((*frame)->values(), "DC frame");
        require_range((*frame)->values(), 0.0, std::numeric_limits<double>::infinity(), "DC frame");
    }
}

bool is_binary(const CodedAperture& aperture) {
    for (double v : aperture.pattern.values()) {
        if (v != 0.0 && v != 1.0) return false;
    }
    return true;
}

}  // namespace snapcube
