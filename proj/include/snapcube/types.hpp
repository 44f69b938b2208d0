#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "snapcube/array.hpp"

namespace snapcube {

/// Uniform wavelength grid centred on the source centre wavelength.
/// Channel j sits at center + (j - (N-1)/2) * spacing, in nm.
struct SpectralGrid {
    double center_wavelength_nm = 830.0;
    double channel_spacing_nm = 0.1;
    std::size_t num_channels = 1;

    double wavelength_nm(std::size_t j) const;
    /// 2*pi / lambda_j in rad/nm.
    double wavenumber(std::size_t j) const;
    std::vector<double> wavenumbers() const;
    /// Sampled spectral range N * spacing (the reconstructed width).
    double sampled_width_nm() const { return channel_spacing_nm * static_cast<double>(num_channels); }

    bool operator==(const SpectralGrid&) const = default;
};

/// Depth planes z_p = origin + p * spacing (µm), measured from the reference mirror.
struct DepthGrid {
    std::size_t num_planes = 1;
    double plane_spacing_um = 1.0;
    double origin_um = 0.0;

    double z_um(std::size_t p) const { return origin_um + plane_spacing_um * static_cast<double>(p); }

    /// Grid whose spacing is the FFT depth interval of `spectral`
    /// (lambda_c^2 / (2 * N * spacing)) and whose plane count is the kept half.
    static DepthGrid from_spectral(const SpectralGrid& spectral);

    bool operator==(const DepthGrid&) const = default;
};

struct ReflectivityVolume {
    Array3 data;  // (nx, ny, nz), nz indexes depth planes
    double pixel_pitch_um = 1.0;
    DepthGrid depth;
};

enum class CubeKind { total_intensity, ac_only };

struct SpectralCube {
    Array3 data;  // (nx, ny, n_channels)
    SpectralGrid grid;
    CubeKind kind = CubeKind::ac_only;
};

/// The calibrated camera-plane image of the coded aperture at the reference
/// channel, stored at measurement width, plus the per-channel column shift.
///
/// Channel k lands on camera columns [offset(k), offset(k) + ny) where
/// offset(k) = step * k - min_k(step * k). Its coding pattern there is the
/// wide pattern translated by offset(k) - offset(k_ref):
///   M_k(i, j') = pattern(i, j' - offset(k) + offset(k_ref)),
/// zero outside the channel's support. In the object frame every channel is
/// therefore coded by the same aperture columns [offset(k_ref), offset(k_ref) + ny).
struct CodedAperture {
    Array2 pattern;  // (nx, measurement width)
    int dispersion_step = 1;

    /// Object-frame width ny implied by the pattern width for `num_channels`.
    std::size_t object_width(std::size_t num_channels) const;
    std::size_t channel_offset(std::size_t k, std::size_t num_channels) const;
    static std::size_t reference_channel(std::size_t num_channels) { return (num_channels - 1) / 2; }
    /// Column in `pattern` that codes object column j for every channel.
    std::size_t aperture_column(std::size_t j, std::size_t num_channels) const {
        return j + channel_offset(reference_channel(num_channels), num_channels);
    }
    /// M_k evaluated in the sheared (camera) frame.
    double shifted(std::size_t i, std::size_t j_sheared, std::size_t k, std::size_t num_channels) const;
};

/// Measurement width for an object width ny, `num_channels` channels and a shear step.
std::size_t measurement_width(std::size_t ny, std::size_t num_channels, int dispersion_step);

struct CameraModel {
    double full_well_capacity_e = 30000.0;
    int bit_depth = 16;
    double pixel_pitch_um = 6.5;
    int oversample_factor = 1;
};

struct Measurement {
    Array2 image;  // (nx, ny + n_channels - 1)
    std::optional<Array2> dc_reference;
    std::optional<Array2> dc_sample;
    CameraModel camera;
};

// Each overload throws ValidationError naming the violated invariant.
void validate(const SpectralGrid& grid);
void validate(const DepthGrid& grid);
void validate(const ReflectivityVolume& volume);
void validate(const SpectralCube& cube);
void validate(const CodedAperture& aperture, std::size_t num_channels);
void validate(const CodedAperture& aperture);
void validate(const CameraModel& camera);
void validate(const Measurement& measurement);

/// Binary check: every entry of the pattern is exactly 0 or 1.
bool is_binary(const CodedAperture& aperture);

}  // namespace snapcube
