#pragma once

#include <optional>
#include <vector>

#include "snapcube/types.hpp"

namespace snapcube {

/// Broadband source sampled on a spectral grid.
struct SourceSpectrum {
    SpectralGrid grid;
    std::vector<double> envelope;  // per channel, max 1
    double fwhm_bandwidth_nm = 20.0;
    double reference_intensity = 1.0;
    /// Per-pixel reference intensity; overrides the scalar when set.
    std::optional<Array2> reference_field;

    double reference_at(std::size_t i, std::size_t j) const {
        return reference_field ? (*reference_field)(i, j) : reference_intensity;
    }
};

/// Gaussian envelope of the given FWHM centred on the grid's centre wavelength.
SourceSpectrum gaussian_source(const SpectralGrid& grid, double fwhm_bandwidth_nm,
                               double reference_intensity = 1.0);

void validate(const SourceSpectrum& source);

/// Interferometer output and the two DC frames that make it up.
struct EncodedCube {
    SpectralCube total;         // ac + dc_reference + dc_sample
    SpectralCube ac;            // envelope * sum_z 2 sqrt(I_r I_s(z)) cos(4 pi z / lambda)
    SpectralCube dc_reference;  // envelope * I_r (sample arm blocked)
    SpectralCube dc_sample;     // envelope * sum_z I_s(z) (reference arm blocked)
};

/// Spectral interference of every lateral pixel's depth profile with the
/// reference mirror at z = 0. Throws ValidationError if any plane lies at or
/// beyond the axial field of view of the source grid.
EncodedCube encode_depth(const ReflectivityVolume& volume, const SourceSpectrum& source);

SpectralCube subtract_dc(const SpectralCube& total, const SpectralCube& dc_reference,
                         const SpectralCube& dc_sample);
Array2 subtract_dc(const Array2& total, const Array2& dc_reference, const Array2& dc_sample);
/// Uses the measurement's own DC frames; both must be present.
Measurement subtract_dc(const Measurement& raw);

/// Amplitude volume on the depth grid implied by the spectral grid.
struct DepthVolume {
    Array3 amplitude;  // (nx, ny, (n_channels + 1) / 2)
    DepthGrid depth;
};

/// Magnitude of the inverse DFT along the spectral axis, normalised by 1/N.
/// Channel index is treated as a uniform wavenumber axis; the mirrored
/// (negative-depth) half is dropped.
DepthVolume decode_depth(const SpectralCube& ac);

/// 0.44 * lambda0^2 / bandwidth, returned in µm (inputs in nm).
double axial_resolution_um(double center_wavelength_nm, double fwhm_bandwidth_nm);
/// lambda0^2 / (4 * spacing), returned in mm (inputs in nm).
double axial_fov_mm(double center_wavelength_nm, double channel_spacing_nm);
/// pixel_pitch * grating_period / focal_length, in nm (µm, µm, mm).
double spectral_resolution_nm(double pixel_pitch_um, double grating_period_um, double focal_length_mm);
/// 10 log10(FWC).
double theoretical_sensitivity_db(double full_well_capacity_e);
/// lambda_c^2 / (2 * sampled width), returned in µm (inputs in nm).
double depth_interval_um(double center_wavelength_nm, double sampled_width_nm);

}  // namespace snapcube
